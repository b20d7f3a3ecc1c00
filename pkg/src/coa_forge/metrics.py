"""Evaluation metrics and reporting.

Aggregates simulation outcomes into per-COA and pooled summaries (mean and
population standard deviation), compares reports against imported baseline
records, and exports reports as CSV, JSON, or an SVG bar chart.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

from .errors import EmptyInput, InvariantViolation, UnsupportedFormat
from .simulation import SimOutcome

METRICS = ("TotalReward", "FriendlyCasualties", "ThreatCasualties")

STD_NOTE = "std is the population standard deviation (normalized by n, not n - 1)"


def mean_std(values: list[float]) -> tuple[float, float]:
    """Two-pass mean and population standard deviation."""
    if not values:
        raise EmptyInput("cannot summarize an empty sample")
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


@dataclass(frozen=True)
class MetricSummary:
    metric: str
    mean: float
    std: float
    n: int

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise InvariantViolation(f"unknown metric {self.metric!r}")
        if self.std < 0:
            raise InvariantViolation(f"{self.metric}: std must be nonnegative, got {self.std}")
        if self.n < 1:
            raise InvariantViolation(f"{self.metric}: sample count must be at least 1, got {self.n}")

    def label(self) -> str:
        return f"{self.mean:.2f} +/- {self.std:.2f}"


@dataclass(frozen=True)
class RolloutRow:
    """One simulation's headline numbers; the report keeps these for audit."""

    coa_id: str
    seed: int | None
    total_reward: float
    friendly_casualties: int
    threat_casualties: int
    objective_seized: bool

    def value(self, metric: str) -> float:
        if metric == "TotalReward":
            return self.total_reward
        if metric == "FriendlyCasualties":
            return float(self.friendly_casualties)
        if metric == "ThreatCasualties":
            return float(self.threat_casualties)
        raise InvariantViolation(f"unknown metric {metric!r}")


@dataclass
class EvalReport:
    variant: str
    pooled: tuple[MetricSummary, ...]
    per_coa: dict[str, tuple[MetricSummary, ...]]
    rows: tuple[RolloutRow, ...]
    base_seed: int | None = None
    config_digest: str | None = None
    note: str = STD_NOTE

    def __post_init__(self) -> None:
        # pooled sample count must equal the sum over COA groups, per metric
        for i, metric in enumerate(METRICS):
            group_total = sum(summaries[i].n for summaries in self.per_coa.values())
            if self.pooled[i].n != group_total:
                raise InvariantViolation(
                    f"{metric}: pooled n {self.pooled[i].n} != sum of per-COA n {group_total}"
                )

    def pooled_summary(self, metric: str) -> MetricSummary:
        for s in self.pooled:
            if s.metric == metric:
                return s
        raise InvariantViolation(f"unknown metric {metric!r}")


def _summaries(rows: list[RolloutRow]) -> tuple[MetricSummary, ...]:
    out = []
    for metric in METRICS:
        m, s = mean_std([r.value(metric) for r in rows])
        out.append(MetricSummary(metric=metric, mean=m, std=s, n=len(rows)))
    return tuple(out)


def aggregate(
    outcomes: list[SimOutcome],
    label: str,
    base_seed: int | None = None,
    config_digest: str | None = None,
) -> EvalReport:
    """Summarize rollout outcomes under a variant label.

    Outcomes that carry COA ids keep their per-COA grouping (in first-seen
    order); outcomes without one fall into a shared "ungrouped" bucket.
    """
    if not outcomes:
        raise EmptyInput("aggregate requires at least one outcome")
    rows = tuple(
        RolloutRow(
            coa_id=o.coa_id if o.coa_id is not None else "ungrouped",
            seed=o.seed,
            total_reward=o.total_reward,
            friendly_casualties=o.friendly_casualties,
            threat_casualties=o.threat_casualties,
            objective_seized=o.objective_seized,
        )
        for o in outcomes
    )
    grouped: dict[str, list[RolloutRow]] = {}
    for row in rows:
        grouped.setdefault(row.coa_id, []).append(row)
    per_coa = {coa_id: _summaries(group) for coa_id, group in grouped.items()}
    return EvalReport(
        variant=label,
        pooled=_summaries(list(rows)),
        per_coa=per_coa,
        rows=rows,
        base_seed=base_seed,
        config_digest=config_digest,
    )


# -- baselines ----------------------------------------------------------------------

@dataclass(frozen=True)
class BaselineRecord:
    """An imported comparison point. Values come from outside this package,
    so every record must say where its numbers came from."""

    label: str
    summaries: tuple[MetricSummary, ...]
    source_note: str

    def __post_init__(self) -> None:
        if not self.source_note.strip():
            raise InvariantViolation(f"baseline {self.label!r} is missing a source note")

    def summary(self, metric: str) -> MetricSummary | None:
        for s in self.summaries:
            if s.metric == metric:
                return s
        return None


def load_baselines() -> list[BaselineRecord]:
    """Bundled baseline figures. Approximate by construction; see source notes."""
    text = resources.files("coa_forge.data").joinpath("baselines/paper_figures.json").read_text("utf-8")
    doc = json.loads(text)
    records = []
    for entry in doc["baselines"]:
        summaries = tuple(
            MetricSummary(metric=s["metric"], mean=s["mean"], std=s["std"], n=s["n"])
            for s in entry["summaries"]
        )
        records.append(
            BaselineRecord(label=entry["label"], summaries=summaries, source_note=entry["source_note"])
        )
    return records


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    cells: dict[str, str]          # metric -> "mean +/- std", blank when absent
    reward_mean: float | None


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]
    best_baseline: str | None
    reward_gap_percent: float | None

    def to_text(self) -> str:
        headers = ["variant", *METRICS]
        table = [[row.label, *(row.cells.get(m, "") for m in METRICS)] for row in self.rows]
        widths = [max(len(headers[i]), *(len(r[i]) for r in table)) for i in range(len(headers))]
        lines = [
            "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
            "  ".join("-" * w for w in widths),
        ]
        lines += ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)) for r in table]
        if self.best_baseline is not None and self.reward_gap_percent is not None:
            lines.append(
                f"reward gap vs best baseline ({self.best_baseline}): {self.reward_gap_percent:+.1f}%"
            )
        return "\n".join(lines)


def compare(report: EvalReport, baselines: list[BaselineRecord]) -> ComparisonTable:
    """One row for the report, one per baseline (sorted by label).

    The gap is the report's mean reward relative to the best baseline's:
    (report - best) / |best| * 100. Baseline values are imported estimates,
    so treat the gap as a ranking aid, not a reproduction target.
    """
    reward = report.pooled_summary("TotalReward")
    rows = [
        ComparisonRow(
            label=report.variant,
            cells={s.metric: s.label() for s in report.pooled},
            reward_mean=reward.mean,
        )
    ]
    best_label: str | None = None
    best_mean: float | None = None
    for b in sorted(baselines, key=lambda b: b.label):
        b_reward = b.summary("TotalReward")
        rows.append(
            ComparisonRow(
                label=b.label,
                cells={s.metric: s.label() for s in b.summaries},
                reward_mean=b_reward.mean if b_reward else None,
            )
        )
        if b_reward is not None and (best_mean is None or b_reward.mean > best_mean):
            best_mean, best_label = b_reward.mean, b.label
    gap = None
    if best_mean is not None and best_mean != 0:
        gap = (reward.mean - best_mean) / abs(best_mean) * 100.0
    return ComparisonTable(rows=rows, best_baseline=best_label, reward_gap_percent=gap)


# -- export -------------------------------------------------------------------------

def _num(x: float) -> int | float:
    """Ints stay ints in JSON; floats keep full precision via repr."""
    return int(x) if float(x).is_integer() else x


def report_to_dict(report: EvalReport) -> dict:
    return {
        "variant": report.variant,
        "note": report.note,
        "base_seed": report.base_seed,
        "config_digest": report.config_digest,
        "pooled": [_summary_to_dict(s) for s in report.pooled],
        "per_coa": {
            coa_id: [_summary_to_dict(s) for s in summaries]
            for coa_id, summaries in report.per_coa.items()
        },
        "rows": [
            {
                "coa_id": r.coa_id,
                "seed": r.seed,
                "total_reward": r.total_reward,
                "friendly_casualties": r.friendly_casualties,
                "threat_casualties": r.threat_casualties,
                "objective_seized": r.objective_seized,
            }
            for r in report.rows
        ],
    }


def _summary_to_dict(s: MetricSummary) -> dict:
    return {"metric": s.metric, "mean": s.mean, "std": s.std, "n": s.n}


def _summary_from_dict(d: dict) -> MetricSummary:
    return MetricSummary(metric=d["metric"], mean=d["mean"], std=d["std"], n=d["n"])


def report_from_dict(doc: dict) -> EvalReport:
    return EvalReport(
        variant=doc["variant"],
        pooled=tuple(_summary_from_dict(s) for s in doc["pooled"]),
        per_coa={
            coa_id: tuple(_summary_from_dict(s) for s in summaries)
            for coa_id, summaries in doc["per_coa"].items()
        },
        rows=tuple(
            RolloutRow(
                coa_id=r["coa_id"],
                seed=r["seed"],
                total_reward=r["total_reward"],
                friendly_casualties=r["friendly_casualties"],
                threat_casualties=r["threat_casualties"],
                objective_seized=r["objective_seized"],
            )
            for r in doc["rows"]
        ),
        base_seed=doc.get("base_seed"),
        config_digest=doc.get("config_digest"),
        note=doc.get("note", STD_NOTE),
    )


def report_from_json(text: str) -> EvalReport:
    return report_from_dict(json.loads(text))


def export(reports: EvalReport | list[EvalReport], format: str) -> str:
    """Serialize one report (or several, for side-by-side charts).

    csv      -> variant,metric,mean,std,n rows (pooled summaries)
    json     -> full report document; round-trips through report_from_json
    svg-bars -> grouped bar chart, one group per report, std whiskers
    """
    if isinstance(reports, EvalReport):
        report_list = [reports]
        single = True
    else:
        report_list = list(reports)
        single = False
    if not report_list:
        raise EmptyInput("export requires at least one report")
    if format == "csv":
        lines = ["variant,metric,mean,std,n"]
        for report in report_list:
            for s in report.pooled:
                lines.append(f"{report.variant},{s.metric},{s.mean!r},{s.std!r},{s.n}")
        return "\n".join(lines) + "\n"
    if format == "json":
        if single:
            return json.dumps(report_to_dict(report_list[0]), indent=2)
        return json.dumps([report_to_dict(r) for r in report_list], indent=2)
    if format == "svg-bars":
        return _svg_bars(report_list)
    raise UnsupportedFormat(f"unsupported export format {format!r} (expected csv, json, or svg-bars)")


_SVG_W, _SVG_H = 640, 360
_MARGIN = 48
_BAR_COLORS = {"TotalReward": "#1f5fbf", "FriendlyCasualties": "#c23b22", "ThreatCasualties": "#6a6a6a"}


def _svg_bars(reports: list[EvalReport]) -> str:
    """Grouped bars with one group per report and one bar per metric.

    The y scale spans [min(0, lowest whisker), highest whisker] so negative
    rewards render below the zero line.
    """
    tops, bottoms = [0.0], [0.0]
    for r in reports:
        for s in r.pooled:
            tops.append(s.mean + s.std)
            bottoms.append(s.mean - s.std)
    y_hi, y_lo = max(tops), min(bottoms)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    plot_h = _SVG_H - 2 * _MARGIN
    plot_w = _SVG_W - 2 * _MARGIN

    def y_px(v: float) -> float:
        return _MARGIN + (y_hi - v) / (y_hi - y_lo) * plot_h

    group_w = plot_w / len(reports)
    bar_w = group_w / (len(METRICS) + 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="#ffffff"/>',
        f'<line class="axis" x1="{_MARGIN}" y1="{y_px(0):.2f}" x2="{_SVG_W - _MARGIN}" '
        f'y2="{y_px(0):.2f}" stroke="#333333"/>',
    ]
    for gi, report in enumerate(reports):
        gx = _MARGIN + gi * group_w
        parts.append(f'<g class="bar-group" data-variant="{_esc(report.variant)}">')
        for mi, s in enumerate(report.pooled):
            x = gx + bar_w * (mi + 0.5)
            y0, y1 = y_px(0), y_px(s.mean)
            top, height = min(y0, y1), abs(y0 - y1)
            cx = x + bar_w / 2
            parts.append(
                f'<rect class="bar" data-metric="{s.metric}" x="{x:.2f}" y="{top:.2f}" '
                f'width="{bar_w:.2f}" height="{height:.2f}" fill="{_BAR_COLORS[s.metric]}"/>'
            )
            parts.append(
                f'<line class="whisker" x1="{cx:.2f}" y1="{y_px(s.mean - s.std):.2f}" '
                f'x2="{cx:.2f}" y2="{y_px(s.mean + s.std):.2f}" stroke="#111111"/>'
            )
        parts.append(
            f'<text x="{gx + group_w / 2:.2f}" y="{_SVG_H - _MARGIN / 2:.2f}" '
            f'text-anchor="middle" font-size="13">{_esc(report.variant)}</text>'
        )
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts)


def _esc(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )
