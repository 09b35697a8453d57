"""Command-line entry point for reproducible experiment runs.

Subcommands: ``ingest``, ``stats``, ``trials``, ``grid``, ``synth``,
``rate-norm``. Options come from built-in defaults, then an optional
key=value config file (``--config`` or the PHONDUR_CONFIG env var), then
command-line flags, in that order. Every run persists its effective
configuration next to its outputs and stamps each output file with the
config hash and seed, so a run can be reproduced from its artifacts alone.

Exit codes: 0 success, 1 usage/config error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from filelock import FileLock, Timeout

from . import __version__
from .corpus import Corpus, load_cache, save_cache
from .eer import build_grid, grid_to_json, write_grid_tsv
from .errors import ConfigError, PhondurError
from .ingest import (
    build_corpus,
    corpus_to_segments,
    corpus_utt2spk,
    parse_ctm,
    parse_textgrid,
    parse_utt2spk,
    write_ctm,
    write_utt2spk,
)
from .inventory import PhonemeInventory, base_inventory, extended_inventory, load_inventory
from .metrics import METRIC_KINDS, NORM_KINDS, MetricConfig
from .stats import (
    duration_profile,
    expected_durations,
    normalize_speech_rate,
    save_expected,
    write_expected_tsv,
)
from .synth import duration_preserving_surrogate, duration_replacing_surrogate, gen_corpus
from .trials import gen_diff_speaker, gen_same_speaker, write_trials

CONFIG_VERSION = 1
CONFIG_ENV_VAR = "PHONDUR_CONFIG"

ANON_MODES = ("none", "preserve-durations", "replace-durations")


@dataclass
class RunConfig:
    """Everything a run needs; persisted verbatim as the provenance record."""

    # inputs
    inventory_file: str = ""
    inventory_mode: str = "base"
    ctm: list[str] = field(default_factory=list)
    textgrid_dir: str = ""
    tier: str = "phones"
    utt2spk: str = ""
    corpus: str = ""        # corpus cache consumed by downstream commands
    train_corpus: str = ""  # rate-normalization reference corpus cache
    # metric
    metrics: list[str] = field(default_factory=lambda: ["ratio"])
    norm: str = "center"
    min_instances: int = 1
    # trials / grids
    m_values: list[int] = field(default_factory=lambda: [1, 3, 5, 10, 20])
    min_instance_values: list[int] = field(default_factory=lambda: [1, 3, 5, 10, 20])
    k_per_speaker: int = 100
    seed: int = 0
    rate_normalize: bool = False
    target_rate: float = 0.0  # 0 = use the reference corpus mean rate
    # synthesis
    n_speakers: int = 20
    utts_per_speaker: int = 40
    phones_per_utt: int = 50
    signature_strength: float = 0.3
    log_std: float = 0.25
    rate_spread: float = 0.0
    min_class_occurrences: int = 0
    anonymize: str = "none"
    residual_strength: float = 1.0
    # output
    out_dir: str = "."
    report_format: str = "tsv"  # tsv | json (grids always produce both)

    def dump(self) -> str:
        lines = [f"config_version={CONFIG_VERSION}"]
        for f_ in sorted(dataclasses.fields(self), key=lambda f_: f_.name):
            value = getattr(self, f_.name)
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f_.name}={value}")
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.dump().encode("utf-8")).hexdigest()[:12]


def _parse_config_value(name: str, text: str, kind):
    if kind is bool:
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"config key {name}: expected a boolean, got {text!r}")
    try:
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"config key {name}: bad value {text!r}") from None
    return text


def load_config_file(path: str | Path) -> dict:
    """Parse a line-oriented key=value config file into override values."""
    fields = {f_.name: f_ for f_ in dataclasses.fields(RunConfig)}
    overrides: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        name, _, text = line.partition("=")
        name, text = name.strip(), text.strip()
        if name == "config_version":
            if text != str(CONFIG_VERSION):
                raise ConfigError(f"{path}: config version {text} != {CONFIG_VERSION}")
            continue
        if name not in fields:
            raise ConfigError(f"{path}:{lineno}: unknown config key {name!r}")
        f_ = fields[name]
        if f_.type.startswith("list[int]"):
            overrides[name] = [int(v) for v in text.split(",") if v] if text else []
        elif f_.type.startswith("list"):
            overrides[name] = [v for v in text.split(",") if v] if text else []
        else:
            overrides[name] = _parse_config_value(name, text, type(getattr(RunConfig(), name)))
    return overrides


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config-file values, then explicit CLI flags."""
    cfg = RunConfig()
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if config_path:
        if not Path(config_path).is_file():
            raise ConfigError(f"config file not found: {config_path}")
        for name, value in load_config_file(config_path).items():
            setattr(cfg, name, value)
    for f_ in dataclasses.fields(RunConfig):
        value = getattr(args, f_.name, None)
        if value is not None:
            setattr(cfg, f_.name, value)
    if cfg.norm not in NORM_KINDS:
        raise ConfigError(f"unknown norm {cfg.norm!r}")
    for metric in cfg.metrics:
        if metric not in METRIC_KINDS:
            raise ConfigError(f"unknown metric {metric!r}; choose from {METRIC_KINDS}")
    if cfg.anonymize not in ANON_MODES:
        raise ConfigError(f"unknown anonymize mode {cfg.anonymize!r}")
    if cfg.report_format not in ("tsv", "json"):
        raise ConfigError(f"unknown report format {cfg.report_format!r}")
    return cfg


def _require_file(path: str, what: str) -> Path:
    if not path:
        raise ConfigError(f"missing required input: {what}")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return p


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _header(cfg: RunConfig, command: str) -> list[str]:
    return [
        f"phondur-{command} format_version={CONFIG_VERSION}",
        f"config_hash={cfg.config_hash} seed={cfg.seed}",
    ]


def _persist_config(cfg: RunConfig, out: Path, command: str) -> None:
    (out / f"{command}.config").write_text(cfg.dump(), encoding="utf-8")


def _load_inventory(cfg: RunConfig) -> PhonemeInventory:
    if cfg.inventory_file:
        path = _require_file(cfg.inventory_file, "inventory file")
        with path.open(encoding="utf-8") as f:
            return load_inventory(f, cfg.inventory_mode, str(path))
    if cfg.inventory_mode == "base":
        return base_inventory()
    if cfg.inventory_mode == "extended":
        return extended_inventory()
    raise ConfigError(f"unknown inventory mode {cfg.inventory_mode!r}")


def _load_corpus(cfg: RunConfig) -> Corpus:
    path = _require_file(cfg.corpus, "corpus cache (--corpus)")
    return load_cache(path)


def cmd_ingest(cfg: RunConfig) -> Path:
    inventory = _load_inventory(cfg)
    if not cfg.ctm and not cfg.textgrid_dir:
        raise ConfigError("ingest needs --ctm and/or --textgrid-dir")
    segments = []
    for ctm_path in cfg.ctm:
        path = _require_file(ctm_path, "CTM file")
        with path.open(encoding="utf-8") as f:
            segments.extend(parse_ctm(f, str(path)))
    if cfg.textgrid_dir:
        tg_dir = Path(cfg.textgrid_dir)
        if not tg_dir.is_dir():
            raise ConfigError(f"TextGrid directory not found: {tg_dir}")
        tg_files = sorted(p for p in tg_dir.iterdir() if p.suffix.lower() == ".textgrid")
        if not tg_files:
            raise ConfigError(f"no .TextGrid files in {tg_dir}")
        for path in tg_files:
            with path.open(encoding="utf-8") as f:
                segments.extend(parse_textgrid(f, cfg.tier, path.stem, str(path)))
    utt2spk_path = _require_file(cfg.utt2spk, "utt2spk file")
    with utt2spk_path.open(encoding="utf-8") as f:
        utt2spk = parse_utt2spk(f, str(utt2spk_path))

    corpus = build_corpus(segments, utt2spk, inventory)
    out = _out_dir(cfg)
    cache = out / "corpus.npz"
    save_cache(corpus, cache, {"config_hash": cfg.config_hash, "seed": cfg.seed})
    _persist_config(cfg, out, "ingest")
    print(
        f"ingested {len(corpus.utterances)} utterances / {len(corpus.speakers)} speakers, "
        f"{corpus.n_classes} classes, dropped {corpus.n_dropped_utterances} -> {cache}"
    )
    return cache


def cmd_stats(cfg: RunConfig) -> Path:
    corpus = _load_corpus(cfg)
    expected = expected_durations(corpus)
    out = _out_dir(cfg)
    header = _header(cfg, "stats")
    with (out / "expected_durations.tsv").open("w", encoding="utf-8") as f:
        write_expected_tsv(expected, f, header)
    save_expected(expected, out / "expected_durations.npz",
                  {"config_hash": cfg.config_hash, "seed": cfg.seed})
    with (out / "speaker_profiles.tsv").open("w", encoding="utf-8") as f:
        for line in header:
            f.write(f"# {line}\n")
        f.write(f"# min_instances={cfg.min_instances}\n")
        for spk in corpus.speaker_ids:
            profile = duration_profile(
                corpus.group(corpus.speakers[spk]), corpus.inventory, cfg.min_instances
            )
            for class_id, label in enumerate(corpus.inventory.labels()):
                f.write(
                    f"{spk}\t{label}\t{profile.mu[class_id]:.9g}\t{int(profile.counts[class_id])}"
                    f"\t{int(profile.filled_mask[class_id])}\n"
                )
    _persist_config(cfg, out, "stats")
    print(f"wrote expected durations and per-speaker profiles for {len(corpus.speakers)} speakers -> {out}")
    return out / "expected_durations.tsv"


def cmd_trials(cfg: RunConfig) -> list[Path]:
    corpus = _load_corpus(cfg)
    out = _out_dir(cfg)
    written = []
    for m in cfg.m_values:
        same = gen_same_speaker(corpus, m, cfg.seed)
        diff = gen_diff_speaker(corpus, m, cfg.k_per_speaker, cfg.seed)
        path = out / f"trials-m{m}.tsv"
        with path.open("w", encoding="utf-8") as f:
            write_trials(same + diff, f, _header(cfg, "trials") + [f"m={m} k_per_speaker={cfg.k_per_speaker}"])
        written.append(path)
        print(f"m={m}: {len(same)} same-speaker + {len(diff)} different-speaker trials -> {path}")
    _persist_config(cfg, out, "trials")
    return written


def cmd_grid(cfg: RunConfig) -> list[Path]:
    corpus = _load_corpus(cfg)
    expected = None
    if cfg.rate_normalize or "rate" in cfg.metrics:
        reference = load_cache(_require_file(cfg.train_corpus, "train corpus")) if cfg.train_corpus else corpus
        expected = expected_durations(reference)
    if cfg.rate_normalize:
        corpus = normalize_speech_rate(corpus, expected, cfg.target_rate or None)
        expected = expected_durations(corpus) if "rate" in cfg.metrics else expected
    out = _out_dir(cfg)
    written = []
    for metric in cfg.metrics:
        base = MetricConfig(kind=metric, norm=cfg.norm, min_instances=1)
        grid = build_grid(
            corpus, base, cfg.m_values, cfg.min_instance_values, cfg.seed, cfg.k_per_speaker,
            expected=expected,
        )
        header = _header(cfg, "grid") + [
            f"metric={metric} norm={cfg.norm} rate_normalize={str(cfg.rate_normalize).lower()}"
        ]
        tsv = out / f"grid-{metric}.tsv"
        with tsv.open("w", encoding="utf-8") as f:
            write_grid_tsv(grid, f, header)
        js = out / f"grid-{metric}.json"
        js.write_text(
            grid_to_json(grid, {"config_hash": cfg.config_hash, "norm": cfg.norm,
                                "rate_normalize": cfg.rate_normalize}),
            encoding="utf-8",
        )
        written.extend([tsv, js])
        print(f"grid[{metric}]: {len(grid.m_values)}x{len(grid.min_instance_values)} cells -> {tsv}")
    _persist_config(cfg, out, "grid")
    return written


def cmd_synth(cfg: RunConfig) -> list[Path]:
    corpus = gen_corpus(
        cfg.n_speakers, cfg.utts_per_speaker, cfg.phones_per_utt, cfg.signature_strength,
        cfg.seed, log_std=cfg.log_std, rate_spread=cfg.rate_spread,
        inventory=_load_inventory(cfg), min_class_occurrences=cfg.min_class_occurrences,
    )
    if cfg.anonymize == "preserve-durations":
        corpus = duration_preserving_surrogate(corpus, cfg.seed)
    elif cfg.anonymize == "replace-durations":
        corpus = duration_replacing_surrogate(corpus, cfg.residual_strength, cfg.seed)
    out = _out_dir(cfg)
    header = _header(cfg, "synth")
    ctm_path = out / "synth.ctm"
    with ctm_path.open("w", encoding="utf-8") as f:
        for line in header:
            f.write(f";; {line}\n")
        write_ctm(corpus_to_segments(corpus), f)
    u2s_path = out / "synth.utt2spk"
    with u2s_path.open("w", encoding="utf-8") as f:
        for line in header:
            f.write(f"# {line}\n")
        write_utt2spk(corpus_utt2spk(corpus), f)
    cache = out / "synth-corpus.npz"
    save_cache(corpus, cache, {"config_hash": cfg.config_hash, "seed": cfg.seed})
    _persist_config(cfg, out, "synth")
    print(
        f"synthesized {len(corpus.utterances)} utterances / {len(corpus.speakers)} speakers "
        f"(anonymize={cfg.anonymize}) -> {ctm_path}"
    )
    return [ctm_path, u2s_path, cache]


def cmd_rate_norm(cfg: RunConfig) -> Path:
    corpus = _load_corpus(cfg)
    reference = load_cache(_require_file(cfg.train_corpus, "train corpus")) if cfg.train_corpus else corpus
    expected = expected_durations(reference)
    normalized = normalize_speech_rate(corpus, expected, cfg.target_rate or None)
    out = _out_dir(cfg)
    cache = out / "rate-normalized-corpus.npz"
    save_cache(normalized, cache, {"config_hash": cfg.config_hash, "seed": cfg.seed})
    _persist_config(cfg, out, "rate-norm")
    print(
        f"normalized {len(normalized.utterances)} utterances to rate "
        f"{cfg.target_rate or expected.overall_rate_mean:.6f} -> {cache}"
    )
    return cache


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this artifact reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _csv_strs(text: str) -> list[str]:
    return [v for v in text.split(",") if v]


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="key=value config file (default: $PHONDUR_CONFIG)")
    sp.add_argument("--out-dir", dest="out_dir", help="output directory (default: .)")
    sp.add_argument("--seed", type=int, help="RNG seed (default: 0)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phondur", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"phondur {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse alignments into a corpus cache")
    _add_common(p)
    p.add_argument("--ctm", action="append", help="CTM alignment file (repeatable)")
    p.add_argument("--textgrid-dir", dest="textgrid_dir", help="directory of per-utterance TextGrids")
    p.add_argument("--tier", help="TextGrid interval tier holding phones (default: phones)")
    p.add_argument("--utt2spk", help="utterance-to-speaker map file")
    p.add_argument("--inventory-file", dest="inventory_file", help="phoneme inventory file")
    p.add_argument("--inventory-mode", dest="inventory_mode", choices=["base", "extended"])
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="expected durations and per-speaker profiles")
    _add_common(p)
    p.add_argument("--corpus", help="corpus cache from ingest/synth")
    p.add_argument("--min-instances", dest="min_instances", type=int)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("trials", help="generate trial list files per m")
    _add_common(p)
    p.add_argument("--corpus", help="corpus cache")
    p.add_argument("--m-values", dest="m_values", type=_csv_ints)
    p.add_argument("--k-per-speaker", dest="k_per_speaker", type=int)
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("grid", help="EER grids over m and min-instances")
    _add_common(p)
    p.add_argument("--corpus", help="corpus cache")
    p.add_argument("--metrics", type=_csv_strs, help="comma list of cosine,ratio,rate")
    p.add_argument("--norm", choices=list(NORM_KINDS))
    p.add_argument("--m-values", dest="m_values", type=_csv_ints)
    p.add_argument("--min-instance-values", dest="min_instance_values", type=_csv_ints)
    p.add_argument("--k-per-speaker", dest="k_per_speaker", type=int)
    p.add_argument("--rate-normalize", dest="rate_normalize", action="store_const", const=True)
    p.add_argument("--train-corpus", dest="train_corpus", help="reference corpus for rate statistics")
    p.add_argument("--target-rate", dest="target_rate", type=float)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("synth", help="generate a synthetic alignment corpus")
    _add_common(p)
    p.add_argument("--n-speakers", dest="n_speakers", type=int)
    p.add_argument("--utts-per-speaker", dest="utts_per_speaker", type=int)
    p.add_argument("--phones-per-utt", dest="phones_per_utt", type=int)
    p.add_argument("--signature-strength", dest="signature_strength", type=float)
    p.add_argument("--log-std", dest="log_std", type=float)
    p.add_argument("--rate-spread", dest="rate_spread", type=float)
    p.add_argument("--min-class-occurrences", dest="min_class_occurrences", type=int)
    p.add_argument("--inventory-file", dest="inventory_file")
    p.add_argument("--inventory-mode", dest="inventory_mode", choices=["base", "extended"])
    p.add_argument("--anonymize", choices=list(ANON_MODES))
    p.add_argument("--residual-strength", dest="residual_strength", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("rate-norm", help="write a rate-normalized corpus cache")
    _add_common(p)
    p.add_argument("--corpus", help="corpus cache")
    p.add_argument("--train-corpus", dest="train_corpus", help="reference corpus for rate statistics")
    p.add_argument("--target-rate", dest="target_rate", type=float)
    p.set_defaults(func=cmd_rate_norm)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_run_config(args)
        out = _out_dir(cfg)
        lock = FileLock(out / ".phondur.lock")
        try:
            with lock.acquire(timeout=0):
                args.func(cfg)
        except Timeout:
            raise ConfigError(f"another phondur run holds {out}/.phondur.lock") from None
        return 0
    except ConfigError as e:
        print(f"phondur: config error: {e}", file=sys.stderr)
        return 1
    except PhondurError as e:
        print(f"phondur: data error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
