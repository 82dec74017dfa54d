"""Per-field time series, growth-share matrix, and innovation life-cycle positions."""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator, Mapping, Sequence

from fostrends.corpus import PaperRecord
from fostrends.taxonomy import Taxonomy, UnknownFieldError, ancestors
from fostrends.yeojohnson import YJParams, fit_lambda, yeo_johnson

G_FLOOR = 1e-10
RATIO_FLOOR = 1e-10
X_BOUNDS = (-5.0, 5.0)

QUADRANTS = ("trending-star", "foundational", "rising-question-mark", "niche")


class TrendsError(ValueError):
    pass


@dataclass(frozen=True)
class WindowSpec:
    """Analysis window ``[t - n + 1, t]`` inside the observation period
    ``[observation_start, t]`` (all bounds inclusive)."""

    t: int = 2022
    n: int = 5
    observation_start: int = 1952

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("window length n must be >= 1")
        if self.observation_start > self.t - self.n:
            raise ValueError(
                f"observation_start {self.observation_start} must be <= t - n = {self.t - self.n}"
            )

    @property
    def start(self) -> int:
        return self.t - self.n + 1

    @property
    def years(self) -> range:
        return range(self.start, self.t + 1)

    @property
    def observed_years(self) -> range:
        return range(self.observation_start, self.t + 1)


@dataclass(frozen=True)
class AnnualSeries:
    field_id: str
    counts: Mapping[int, int]

    def __getitem__(self, year: int) -> int:
        return self.counts.get(year, 0)

    def total(self, years: Iterable[int] | None = None) -> int:
        if years is None:
            return sum(self.counts.values())
        return sum(self.counts.get(y, 0) for y in years)


SeriesMap = Mapping[str, AnnualSeries]


def annual_counts(
    records: Iterable[PaperRecord],
    taxonomy: Taxonomy,
    window: WindowSpec,
    propagate: bool = True,
) -> dict[str, AnnualSeries]:
    """Count records per field and year over the observation period.

    Every taxonomy node gets a dense series (missing years are 0). With
    ``propagate`` a record also counts once toward each ancestor of its labels.
    Records dated outside the observation period are ignored.
    """
    years = window.observed_years
    table = {fid: dict.fromkeys(years, 0) for fid in taxonomy.ids()}
    for r in records:
        if r.year not in years:
            continue
        fields = set(r.labels)
        unknown = fields - set(table)
        if unknown:
            raise UnknownFieldError(sorted(unknown)[0])
        if propagate:
            for fid in list(fields):
                fields |= ancestors(taxonomy, fid)
        for fid in fields:
            table[fid][r.year] += 1
    return {fid: AnnualSeries(fid, counts) for fid, counts in table.items()}


def growth_rate(series: AnnualSeries, window: WindowSpec, method: str = "relative") -> float:
    """Change between the first and last window year.

    ``relative``: ``(c_end - c_start) / max(c_start, 1)``.
    ``cagr``: compound annual rate over the ``n - 1`` year steps, with the
    same ``max(c_start, 1)`` guard.
    """
    c_start, c_end = series[window.start], series[window.t]
    base = max(c_start, 1)
    if method == "relative":
        return (c_end - c_start) / base
    if method == "cagr":
        if window.n == 1:
            return 0.0
        return (c_end / base) ** (1 / (window.n - 1)) - 1
    raise ValueError(f"unknown growth method {method!r}")


# ------------------------------------------------------------ growth-share matrix


@dataclass(frozen=True)
class MatrixPoint:
    field_id: str
    raw_growth: float
    raw_total: float
    tf_growth: float
    tf_total: float
    quadrant: str


@dataclass(frozen=True)
class GrowthShareMatrix:
    points: list[MatrixPoint]
    growth_params: YJParams
    total_params: YJParams
    split: str
    growth_cut: float
    total_cut: float

    def __iter__(self) -> Iterator[MatrixPoint]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def quadrants(self) -> dict[str, str]:
        return {p.field_id: p.quadrant for p in self.points}


def _cut(values: Sequence[float], split: str) -> float:
    if split == "median":
        return statistics.median(values)
    if split == "mean":
        return statistics.fmean(values)
    raise ValueError(f"unknown split rule {split!r}")


def quadrant(high_growth: bool, high_total: bool) -> str:
    if high_total:
        return "trending-star" if high_growth else "foundational"
    return "rising-question-mark" if high_growth else "niche"


def matrix_from_raw(
    field_ids: Sequence[str],
    raw_growth: Sequence[float],
    raw_total: Sequence[float],
    params: YJParams | None = None,
    split: str = "median",
) -> GrowthShareMatrix:
    """Transform both axes with their own fitted λ and split at the cut value.

    A coordinate is "high" when it is strictly above the cut (median by
    default) of that axis across fields.
    """
    if len(field_ids) < 3:
        raise TrendsError(f"growth-share matrix needs at least 3 fields, got {len(field_ids)}")
    params = params or YJParams()
    try:
        gp = fit_lambda(raw_growth, params)
        tp = fit_lambda(raw_total, params)
    except ValueError as exc:
        raise TrendsError(f"cannot fit Yeo-Johnson λ: {exc}") from exc
    tf_g = [float(v) for v in yeo_johnson(raw_growth, gp.lmbda)]
    tf_t = [float(v) for v in yeo_johnson(raw_total, tp.lmbda)]
    g_cut, t_cut = _cut(tf_g, split), _cut(tf_t, split)
    points = [
        MatrixPoint(fid, float(g), t, tg, tt, quadrant(tg > g_cut, tt > t_cut))
        for fid, g, t, tg, tt in zip(field_ids, raw_growth, raw_total, tf_g, tf_t)
    ]
    points.sort(key=lambda p: p.field_id)
    return GrowthShareMatrix(points, gp, tp, split, g_cut, t_cut)


def growth_share_matrix(
    series_map: SeriesMap,
    window: WindowSpec,
    params: YJParams | None = None,
    split: str = "median",
    growth_method: str = "relative",
) -> GrowthShareMatrix:
    """Growth-share matrix over every series in ``series_map``.

    Raw growth is :func:`growth_rate` over the window and raw total the sum of
    window counts. At least three fields must have a nonzero window total.
    """
    ids = sorted(series_map)
    active = [fid for fid in ids if series_map[fid].total(window.years) > 0]
    if len(active) < 3:
        raise TrendsError(
            f"growth-share matrix needs at least 3 fields with papers in {window.start}-{window.t}, "
            f"got {len(active)}"
        )
    return matrix_from_raw(
        ids,
        [growth_rate(series_map[f], window, growth_method) for f in ids],
        [series_map[f].total(window.years) for f in ids],
        params,
        split,
    )


# ------------------------------------------------------------------ life cycle


@dataclass(frozen=True)
class LifecycleComponents:
    field_id: str
    g: float
    h: float
    k: float
    raw_growth: float


@dataclass(frozen=True)
class LifecyclePoint:
    field_id: str
    g: float
    h: float
    k: float
    x: float
    x_norm: float
    y: float


def _minmax(values: Sequence[float], lo: float, hi: float) -> list[float]:
    vmin, vmax = min(values), max(values)
    if vmax == vmin:
        raise TrendsError("normalization undefined: all values are equal")
    return [lo + (v - vmin) * (hi - lo) / (vmax - vmin) for v in values]


def lifecycle_components(
    series_map: SeriesMap,
    window: WindowSpec,
    observation_start: int | None = None,
    growth_method: str = "relative",
) -> list[LifecycleComponents]:
    """Growth (g), window share of own history (h), and share of window output (k).

    ``g`` is the growth rate min-max scaled into ``[1e-10, 1]`` across fields;
    when every field has the same growth rate, all get ``g = 1``. ``h`` and
    ``k`` are floored at ``1e-10``.
    """
    start = window.observation_start if observation_start is None else observation_start
    if start > window.start:
        raise TrendsError(f"observation start {start} is after the window start {window.start}")
    ids = sorted(series_map)
    if not ids:
        raise TrendsError("no fields given")
    observed = range(start, window.t + 1)
    in_window = {f: series_map[f].total(window.years) for f in ids}
    all_window = sum(in_window.values())
    if all_window == 0:
        raise TrendsError(f"no papers in window {window.start}-{window.t}")
    rates = [growth_rate(series_map[f], window, growth_method) for f in ids]
    if max(rates) == min(rates):
        gs = [1.0] * len(ids)
    else:
        gs = _minmax(rates, G_FLOOR, 1.0)
    out = []
    for fid, g, rate in zip(ids, gs, rates):
        history = series_map[fid].total(observed)
        h = in_window[fid] / history if history else 0.0
        k = in_window[fid] / all_window
        out.append(LifecycleComponents(fid, g, max(h, RATIO_FLOOR), max(k, RATIO_FLOOR), rate))
    return out


def lifecycle_points(
    components: Sequence[LifecycleComponents],
    base: float = math.e,
    bounds: tuple[float, float] = X_BOUNDS,
) -> list[LifecyclePoint]:
    """Place fields on the logistic adoption curve.

    ``x = log((1/g) * (1/h) * k)``, min-max scaled to ``bounds`` and pushed
    through the standard logistic. The log base cancels in the scaling.
    """
    if len(components) < 2:
        raise TrendsError(f"normalization undefined: need at least 2 fields, got {len(components)}")
    xs = [math.log(c.k, base) - math.log(c.g, base) - math.log(c.h, base) for c in components]
    if max(xs) == min(xs):
        raise TrendsError("normalization undefined: every field has the same x")
    x_norm = _minmax(xs, *bounds)
    return [
        LifecyclePoint(c.field_id, c.g, c.h, c.k, x, xn, 1.0 / (1.0 + math.exp(-xn)))
        for c, x, xn in zip(components, xs, x_norm)
    ]


# -------------------------------------------------------------------- rankings


def load_counts(stream: BinaryIO | bytes | str) -> dict[str, int]:
    """Read pre-aggregated counts: ``field_id,count`` or ``field_id,year,count``.

    Rows for the same field are summed.
    """
    if hasattr(stream, "read"):
        stream = stream.read()
    if isinstance(stream, bytes):
        stream = stream.decode("utf-8")
    reader = csv.DictReader(io.StringIO(stream))
    if not reader.fieldnames or not {"field_id", "count"} <= set(reader.fieldnames):
        raise TrendsError("counts file needs 'field_id' and 'count' columns")
    totals: dict[str, int] = {}
    for lineno, row in enumerate(reader, 2):
        try:
            n = int(row["count"].replace(",", "").replace("_", ""))
        except (AttributeError, ValueError):
            raise TrendsError(f"line {lineno}: bad count {row.get('count')!r}") from None
        if n < 0:
            raise TrendsError(f"line {lineno}: negative count")
        totals[row["field_id"]] = totals.get(row["field_id"], 0) + n
    return totals


def rank_fields(totals: Mapping[str, int], top: int | None = None) -> list[tuple[str, int]]:
    """Fields by descending count; ties broken by field id."""
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked if top is None else ranked[:top]


def series_totals(series_map: SeriesMap, years: Iterable[int] | None = None) -> dict[str, int]:
    years = list(years) if years is not None else None
    return {fid: s.total(years) for fid, s in series_map.items()}


# --------------------------------------------------------------------- exports


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def series_csv(series_map: SeriesMap) -> str:
    return _csv(
        ("field_id", "year", "count"),
        ((fid, y, c) for fid in sorted(series_map) for y, c in sorted(series_map[fid].counts.items())),
    )


def matrix_csv(matrix: GrowthShareMatrix) -> str:
    return _csv(
        ("field_id", "raw_growth", "raw_total", "tf_growth", "tf_total", "quadrant"),
        ((p.field_id, repr(p.raw_growth), p.raw_total, repr(p.tf_growth), repr(p.tf_total), p.quadrant)
         for p in matrix),
    )


def lifecycle_csv(points: Sequence[LifecyclePoint]) -> str:
    return _csv(
        ("field_id", "g", "h", "k", "x", "x_norm", "y"),
        ((p.field_id, *(repr(v) for v in (p.g, p.h, p.k, p.x, p.x_norm, p.y)))
         for p in sorted(points, key=lambda p: p.field_id)),
    )
