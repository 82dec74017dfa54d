import sys

from fostrends.cli import main

sys.exit(main())
