"""Field-of-study labeling and research-trend analytics for bibliographic corpora."""

__version__ = "0.1.0"
