"""Declarative pipeline configuration.

One YAML file holds every knob: input paths, seed, classifier settings,
pronoun-list overrides, category preset, outlier exclusions, and map bucket
fractions.  CLI flags override individual fields.  The config hash stamped
into artifact headers excludes the output directory, so moving outputs never
changes artifact identity.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import yaml

from .corpus import parse_rfc3339
from .delineate import PronounLists
from .errors import ConfigError


def _as_utc(value) -> datetime:
    # YAML may hand back a parsed datetime or the raw string
    if isinstance(value, datetime):
        if value.tzinfo is None:
            return value.replace(tzinfo=timezone.utc)
        return value.astimezone(timezone.utc)
    return parse_rfc3339(str(value))


@dataclass(frozen=True)
class ClassifierSettings:
    orders: tuple[int, ...] = (1, 2, 3)
    buckets: int = 1 << 21
    dim: int = 10
    epochs: int = 5
    learning_rate: float = 0.1
    threshold: float | str = "auto"  # "auto" selects the F1-optimal grid point
    k_folds: int = 10


@dataclass(frozen=True)
class LexiconFilterSettings:
    min_sightings: int = 10
    require_discrimination: bool = True


@dataclass(frozen=True)
class ActiveLearningSettings:
    fraction: float = 0.05
    epsilon: float = 0.002
    max_iterations: int = 10


@dataclass(frozen=True)
class TrainsetSettings:
    max_matched: int = 200       # cap on lexicon-matched records taken as seeds
    positive_share: float = 0.12  # padded with balanced negatives to this share


@dataclass(frozen=True)
class AnnotationSettings:
    min_judgments: int = 2
    test_rate: int = 10


@dataclass(frozen=True)
class ReportSettings:
    regression_measure: str = "proportion"  # or "ratio"
    exclude_cities: tuple[str, ...] = ()
    bucket_fractions: tuple[float, float, float] = (0.25, 0.5, 0.25)
    top_k_features: int = 20


@dataclass(frozen=True)
class PipelineConfig:
    base_dir: Path
    out_dir: Path
    seed: int = 0
    records_path: Path = Path("records.ndjson")
    registry_path: Path = Path("registry.csv")
    lexicon_path: Path = Path("lexicon.csv")
    categories_path: Path = Path("categories.txt")
    bot_manifest_path: Path | None = None
    test_tasks_path: Path | None = None
    labels_path: Path | None = None  # answer key for replayed annotation
    window_start: datetime | None = None
    window_end: datetime | None = None
    classifier: ClassifierSettings = field(default_factory=ClassifierSettings)
    lexicon_filter: LexiconFilterSettings = field(default_factory=LexiconFilterSettings)
    trainset: TrainsetSettings = field(default_factory=TrainsetSettings)
    active_learning: ActiveLearningSettings = field(default_factory=ActiveLearningSettings)
    annotation: AnnotationSettings = field(default_factory=AnnotationSettings)
    report: ReportSettings = field(default_factory=ReportSettings)
    pronouns: PronounLists = field(default_factory=PronounLists)
    drop_bots: bool = False

    def window(self) -> tuple[datetime, datetime] | None:
        if self.window_start is None or self.window_end is None:
            return None
        return (self.window_start, self.window_end)

    def hash(self) -> str:
        """Stable digest of everything except out_dir/base_dir."""
        payload = asdict(self)
        payload.pop("out_dir")
        payload.pop("base_dir")
        for key, value in list(payload.items()):
            if isinstance(value, Path):
                payload[key] = str(value)
            elif isinstance(value, datetime):
                payload[key] = value.isoformat()
        payload["pronouns"] = {
            "first": sorted(self.pronouns.first),
            "second": sorted(self.pronouns.second),
            "third": sorted(self.pronouns.third),
        }
        blob = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _resolve(base: Path, raw: str | None) -> Path | None:
    if raw is None:
        return None
    p = Path(raw)
    return p if p.is_absolute() else base / p


def _tuple_section(cls, raw: dict, name: str):
    """Build a settings dataclass from a config section, list -> tuple."""
    section = raw.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"config section {name} must be a mapping")
    allowed = {f for f in cls.__dataclass_fields__}
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"config section {name}: unknown keys {sorted(unknown)}")
    coerced = {
        k: tuple(v) if isinstance(v, list) else v for k, v in section.items()
    }
    return cls(**coerced)


def load_config(path: str | Path, out_dir: str | Path | None = None) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path}: top level must be a mapping")

    base = path.parent.resolve()
    paths = raw.get("paths") or {}
    window = raw.get("window") or {}
    pronoun_cfg = raw.get("pronouns") or {}

    try:
        cfg = PipelineConfig(
            base_dir=base,
            out_dir=Path(out_dir) if out_dir else (_resolve(base, raw.get("out_dir")) or base / "out"),
            seed=int(raw.get("seed", 0)),
            records_path=_resolve(base, paths.get("records", "records.ndjson")),
            registry_path=_resolve(base, paths.get("registry", "registry.csv")),
            lexicon_path=_resolve(base, paths.get("lexicon", "lexicon.csv")),
            categories_path=_resolve(base, paths.get("categories", "categories.txt")),
            bot_manifest_path=_resolve(base, paths.get("bot_manifest")),
            test_tasks_path=_resolve(base, paths.get("test_tasks")),
            labels_path=_resolve(base, paths.get("labels")),
            window_start=_as_utc(window["start"]) if "start" in window else None,
            window_end=_as_utc(window["end"]) if "end" in window else None,
            classifier=_tuple_section(ClassifierSettings, raw, "classifier"),
            lexicon_filter=_tuple_section(LexiconFilterSettings, raw, "lexicon_filter"),
            trainset=_tuple_section(TrainsetSettings, raw, "trainset"),
            active_learning=_tuple_section(ActiveLearningSettings, raw, "active_learning"),
            annotation=_tuple_section(AnnotationSettings, raw, "annotation"),
            report=_tuple_section(ReportSettings, raw, "report"),
            pronouns=PronounLists.from_config(
                pronoun_cfg.get("first"), pronoun_cfg.get("second"), pronoun_cfg.get("third")
            ),
            drop_bots=bool(raw.get("drop_bots", False)),
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: PipelineConfig) -> None:
    cs = cfg.classifier
    if not set(cs.orders) <= {1, 2, 3} or not cs.orders:
        raise ConfigError("classifier.orders must be a non-empty subset of {1,2,3}")
    if cs.buckets < 2 or cs.buckets & (cs.buckets - 1):
        raise ConfigError("classifier.buckets must be a power of two")
    if isinstance(cs.threshold, str):
        if cs.threshold != "auto":
            raise ConfigError("classifier.threshold must be a number in (0,1) or 'auto'")
    elif not 0.0 < float(cs.threshold) < 1.0:
        raise ConfigError("classifier.threshold must lie in (0,1)")
    if cs.k_folds < 2:
        raise ConfigError("classifier.k_folds must be at least 2")
    ts = cfg.trainset
    if not 0.0 < ts.positive_share < 1.0:
        raise ConfigError("trainset.positive_share must be in (0,1)")
    if ts.max_matched < 1:
        raise ConfigError("trainset.max_matched must be positive")
    al = cfg.active_learning
    if not 0.0 < al.fraction < 0.5:
        raise ConfigError("active_learning.fraction must be in (0, 0.5)")
    if al.max_iterations < 1:
        raise ConfigError("active_learning.max_iterations must be positive")
    rep = cfg.report
    if rep.regression_measure not in ("proportion", "ratio"):
        raise ConfigError("report.regression_measure must be 'proportion' or 'ratio'")
    if len(rep.bucket_fractions) != 3 or abs(sum(rep.bucket_fractions) - 1.0) > 1e-9:
        raise ConfigError("report.bucket_fractions must be three fractions summing to 1")
    if (cfg.window_start is None) != (cfg.window_end is None):
        raise ConfigError("window needs both start and end")
    if cfg.window() is not None and cfg.window_start >= cfg.window_end:
        raise ConfigError("window start must precede end")
