"""Command-line pipeline: synth -> deconvolve -> extract -> train/eval/sffs/permtest.

Every randomized command takes a ``--seed``; identical configuration and
seed reproduce identical output bytes. Options resolve as
flags > ``--config`` JSON file > built-in defaults. Report commands write
delimited output always and render matplotlib figures next to it when
``--plot`` is given.

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import audio_io
from .classify import (
    ConfusionMatrix,
    fit,
    kfold_cv,
    permutation_test,
    permutation_test_joint,
    predict_batch,
    save_model,
    sffs,
)
from .dataset import LabeledDataset, load_dataset, save_dataset
from .errors import (
    DatasetFormatError,
    DegenerateSignalError,
    InsufficientDataError,
    InsufficientDecayError,
    NoCrossingError,
    RoomEchoError,
    SaturationError,
    TimeAliasingError,
)
from .features import FEATURE_NAMES, NaerParams, extract_features, feature_names_for
from .filters import OCTAVE_CENTERS
from .mls import MeasurementConfig, average_periods, deconvolve, generate_mls
from .signals import measure_pnr
from .synth import RoomSpec, degrade_rir, synth_rir

log = logging.getLogger("roomecho")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

_USAGE_ERRORS = (ValueError,)
_DATA_ERRORS = (DatasetFormatError, InsufficientDataError, TimeAliasingError,
                FileNotFoundError, NotADirectoryError, IsADirectoryError)
_NUMERICAL_ERRORS = (DegenerateSignalError, InsufficientDecayError,
                     NoCrossingError, SaturationError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage to 1
        raise UsageError(message)


# --- option resolution --------------------------------------------------------

DEFAULTS: dict[str, dict] = {
    "synth": {
        "specs": None, "out_dir": None, "samples": 50, "positions": 2,
        "duration": 1.6, "fs": 44100.0, "format": "csv", "seed": 0,
        "visit_id": "1", "pos_spread_db": 1.0, "pnr_drop": 0.0,
        "bursts": 0, "burst_ms": 10.0,
    },
    "deconvolve": {
        "recordings": None, "out_dir": None, "order": 17, "n_reps": 6,
        "fs": 44100.0, "path": "fft", "discard_first": True, "format": "csv",
    },
    "extract": {
        "manifest": None, "out": None, "t_window": 1.5, "max_rt": None,
        "bands": None,
        "naer_per_noise": 0.1, "naer_threshold": 1e-3, "naer_bond": None,
    },
    "train": {
        "dataset": None, "out": None, "kind": "gaussian_nb", "features": None,
        "knn_k": 5,
    },
    "eval": {
        "dataset": None, "out_dir": None, "kind": "gaussian_nb", "folds": 10,
        "seed": 0, "features": None, "knn_k": 5, "train_filter": None,
        "test_filter": None, "plot": False, "sweep_window": False,
        "manifest": None, "windows": None, "t_window": 1.5, "max_rt": None,
        "bands": None,
        "naer_per_noise": 0.1, "naer_threshold": 1e-3, "naer_bond": None,
    },
    "sffs": {
        "dataset": None, "out_dir": None, "kind": "gaussian_nb", "folds": 10,
        "seed": 0, "max_features": None, "knn_k": 5, "plot": False,
    },
    "permtest": {
        "dataset": None, "out_dir": None, "feature": "all", "n_perm": 4999,
        "seed": 0, "bins": 32, "plot": False,
    },
}


def _resolve(command: str, args: argparse.Namespace) -> dict:
    """flags > config file > defaults."""
    options = dict(DEFAULTS[command])
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            config = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DatasetFormatError(f"config {config_path}: {exc}") from exc
        unknown = set(config) - set(options)
        if unknown:
            raise UsageError(
                f"config keys not valid for '{command}': {', '.join(sorted(unknown))}"
            )
        options.update(config)
    for key, value in vars(args).items():
        if key in options:
            options[key] = value
    return options


def _require(options: dict, *keys: str) -> None:
    missing = [k for k in keys if options[k] is None]
    if missing:
        raise UsageError(
            "missing required option(s): " + ", ".join(f"--{k.replace('_', '-')}" for k in missing)
        )


def _parse_feature_list(spec: str | None) -> tuple[int, ...] | None:
    if spec is None or spec == "all":
        return None
    indices = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        if token in FEATURE_NAMES:
            indices.append(FEATURE_NAMES.index(token))
        else:
            try:
                indices.append(int(token))
            except ValueError:
                raise UsageError(f"unknown feature {token!r}")
    if not indices:
        raise UsageError("empty feature list")
    return tuple(indices)


def _parse_filter(spec: str | None) -> dict:
    if spec is None or spec == "all":
        return {}
    out = {}
    for token in spec.split(","):
        if "=" not in token:
            raise UsageError(f"filter term {token!r} must look like visit=1 or noise=quiet")
        key, value = token.split("=", 1)
        key = key.strip()
        if key not in ("visit", "noise", "label"):
            raise UsageError(f"filters accept visit=, noise= and label=, not {key!r}")
        out[key] = value.strip()
    return out


def _naer_params(options: dict) -> NaerParams:
    bond = options["naer_bond"]
    if bond is not None:
        bond = float(bond)
        if bond >= 1.0:
            bond = int(bond)
    return NaerParams(
        per_noise=float(options["naer_per_noise"]),
        bond_point=bond,
        threshold=float(options["naer_threshold"]),
    )


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


# --- synth ---------------------------------------------------------------------

def _load_room_specs(path) -> list[dict]:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"room specs {path}: {exc}") from exc
    rooms = raw["rooms"] if isinstance(raw, dict) else raw
    if not isinstance(rooms, list) or not rooms:
        raise DatasetFormatError(f"room specs {path}: expected a non-empty list of rooms")
    for room in rooms:
        for key in ("label", "rt_per_band"):
            if key not in room:
                raise DatasetFormatError(f"room specs {path}: room missing {key!r}")
    return rooms


def cmd_synth(options: dict) -> int:
    _require(options, "specs", "out_dir")
    rooms = _load_room_specs(options["specs"])
    out_dir = Path(options["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    fs = float(options["fs"])
    duration = float(options["duration"])
    fmt = options["format"]
    if fmt not in ("csv", "wav"):
        raise UsageError("--format must be csv or wav")
    noisy = float(options["pnr_drop"]) > 0 or int(options["bursts"]) > 0
    condition = "noisy" if noisy else "quiet"

    manifest_rows = []
    for room_index, room in enumerate(rooms):
        rt_per_band = {float(k): float(v) for k, v in room["rt_per_band"].items()}
        for position in range(int(options["positions"])):
            # positions in a room see slightly different direct/reverb balance
            offset = (position - (int(options["positions"]) - 1) / 2.0) * float(
                options["pos_spread_db"]
            )
            for sample in range(int(options["samples"])):
                seed = _derived_seed(int(options["seed"]), room_index, position, sample)
                spec = RoomSpec(
                    label=str(room["label"]),
                    rt_per_band=rt_per_band,
                    direct_to_reverb_db=float(room.get("direct_to_reverb_db", 3.0)) + offset,
                    pnr_db=float(room.get("pnr_db", 34.0)),
                    modes=tuple(
                        (float(f), float(e)) for f, e in room.get("modes", [])
                    ),
                    volume_m3=room.get("volume_m3"),
                    surface_area_m2=room.get("surface_area_m2"),
                    avg_absorption=room.get("avg_absorption"),
                    rng_seed=seed,
                )
                rir = synth_rir(spec, duration, fs)
                if noisy:
                    rir = degrade_rir(
                        rir,
                        pnr_drop_db=float(options["pnr_drop"]),
                        n_bursts=int(options["bursts"]),
                        burst_ms=float(options["burst_ms"]),
                        rng=np.random.default_rng(_derived_seed(seed, 0xB00)),
                    )
                name = f"{spec.label}_p{position}_s{sample:03d}.{fmt}"
                audio_io.write_rir(out_dir / name, rir)
                manifest_rows.append({
                    "file": name,
                    "label": spec.label,
                    "space_kind": room.get("space_kind", "closed"),
                    "visit_id": str(options["visit_id"]),
                    "noise_condition": condition,
                    "position_id": str(position),
                    "sample_index": sample,
                    "seed": seed,
                    "sample_rate": fs,
                    "duration_s": duration,
                    "direct_to_reverb_db": spec.direct_to_reverb_db,
                    "pnr_db": spec.pnr_db,
                    "rt_per_band": json.dumps(rt_per_band, sort_keys=True),
                    "modes": json.dumps(list(spec.modes)),
                })

    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(manifest_rows[0]))
        writer.writeheader()
        writer.writerows(manifest_rows)
    log.info("wrote %d impulse responses and %s", len(manifest_rows), manifest)
    return EXIT_OK


# --- deconvolve ----------------------------------------------------------------

def cmd_deconvolve(options: dict) -> int:
    _require(options, "recordings", "out_dir")
    paths = []
    for entry in options["recordings"]:
        p = Path(entry)
        if p.is_dir():
            paths.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in (".wav", ".csv")))
        else:
            paths.append(p)
    if not paths:
        raise DatasetFormatError("no recordings found")
    out_dir = Path(options["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    mls = generate_mls(int(options["order"]))
    cfg = MeasurementConfig(
        mls_order=int(options["order"]),
        n_reps=int(options["n_reps"]),
        sample_rate=float(options["fs"]),
        discard_first_period=bool(options["discard_first"]),
    )
    fmt = options["format"]
    summary = []
    for path in paths:
        rec = audio_io.read_recording(path, sample_rate=cfg.sample_rate)
        rir = deconvolve(average_periods(rec, cfg), mls, path=options["path"])
        pnr = measure_pnr(rir)
        out_name = f"{path.stem}_rir.{fmt}"
        audio_io.write_rir(out_dir / out_name, rir)
        log.info("%s -> %s (PNR %.1f dB)", path.name, out_name, pnr)
        summary.append({"recording": path.name, "rir_file": out_name,
                        "pnr_db": f"{pnr:.17g}"})

    with open(out_dir / "deconvolve_summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["recording", "rir_file", "pnr_db"])
        writer.writeheader()
        writer.writerows(summary)
    return EXIT_OK


# --- extract -------------------------------------------------------------------

def _read_manifest(path) -> list[dict]:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DatasetFormatError(f"{path}: manifest is empty")
    for needed in ("file", "label"):
        if needed not in rows[0]:
            raise DatasetFormatError(f"{path}: manifest lacks a {needed!r} column")
    return rows


def _dataset_from_manifest(manifest_path, options: dict) -> tuple[LabeledDataset, list[dict]]:
    manifest_path = Path(manifest_path)
    rows = _read_manifest(manifest_path)
    naer = _naer_params(options)
    t_window = float(options["t_window"])
    max_rt = None if options["max_rt"] is None else float(options["max_rt"])

    vectors, labels, visits, noises, positions, provenance = [], [], [], [], [], []
    for row in rows:
        rir_path = manifest_path.parent / row["file"]
        fs = float(row["sample_rate"]) if row.get("sample_rate") else None
        rir = audio_io.read_rir(rir_path, sample_rate=fs)
        try:
            fv = extract_features(rir, t_window=t_window, naer=naer, max_rt=max_rt)
        except RoomEchoError as exc:
            raise type(exc)(f"{row['file']}: {exc}") from exc
        vectors.append(fv.as_array())
        labels.append(row["label"])
        visits.append(row.get("visit_id", "1") or "1")
        noises.append(row.get("noise_condition", "quiet") or "quiet")
        positions.append(row.get("position_id", "0") or "0")
        provenance.append({"file": row["file"], "label": row["label"]})

    ds = LabeledDataset(
        features=np.vstack(vectors),
        labels=labels,
        visit_ids=visits,
        noise_conditions=noises,
        position_ids=positions,
    )
    return ds, provenance


def cmd_extract(options: dict) -> int:
    _require(options, "manifest", "out")
    ds, provenance = _dataset_from_manifest(options["manifest"], options)
    out = Path(options["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out)
    sidecar = out.with_suffix(".manifest.json")
    sidecar.write_text(json.dumps({"rows": provenance}, indent=2))
    log.info("extracted %d fingerprints -> %s", len(ds), out)
    return EXIT_OK


# --- train ---------------------------------------------------------------------

def cmd_train(options: dict) -> int:
    _require(options, "dataset", "out")
    ds = load_dataset(options["dataset"])
    model = fit(
        options["kind"], ds,
        feature_subset=_parse_feature_list(options["features"]),
        k=int(options["knn_k"]),
    )
    save_model(model, options["out"])
    log.info("trained %s on %d rows -> %s", options["kind"], len(ds), options["out"])
    return EXIT_OK


# --- eval ----------------------------------------------------------------------

def _write_eval_reports(cm: ConfusionMatrix, meta: dict, out_dir: Path, plot: bool) -> None:
    cm.write_csv(out_dir / "confusion.csv")
    (out_dir / "confusion.txt").write_text(cm.to_text() + "\n")
    summary = dict(meta)
    summary["overall_accuracy"] = cm.overall_accuracy()
    summary["per_class_accuracy"] = cm.per_class_accuracy()
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    if plot:
        from . import plotting

        plotting.save_confusion_matrix(cm, out_dir / "confusion.png")


def _eval_cv(options: dict, out_dir: Path) -> None:
    ds = load_dataset(options["dataset"])
    subset = _parse_feature_list(options["features"])
    cm, accuracy, _ = kfold_cv(
        ds, int(options["folds"]), options["kind"],
        feature_subset=subset, seed=int(options["seed"]), k=int(options["knn_k"]),
    )
    log.info("%d-fold CV accuracy: %.1f%%", int(options["folds"]), 100 * accuracy)
    meta = {"mode": "cv", "kind": options["kind"], "folds": int(options["folds"]),
            "seed": int(options["seed"]), "n_rows": len(ds),
            "features": list(subset) if subset else "all"}
    _write_eval_reports(cm, meta, out_dir, options["plot"])


def _eval_split(options: dict, out_dir: Path) -> None:
    ds = load_dataset(options["dataset"])
    train_ds = ds.filter(**_parse_filter(options["train_filter"]))
    test_ds = ds.filter(**_parse_filter(options["test_filter"]))
    if len(train_ds) == 0 or len(test_ds) == 0:
        raise UsageError("train/test filters selected no rows")
    subset = _parse_feature_list(options["features"])
    model = fit(options["kind"], train_ds, feature_subset=subset, k=int(options["knn_k"]))
    cm = ConfusionMatrix.zeros(sorted(set(test_ds.labels) | set(train_ds.labels)))
    for true_label, predicted in zip(
        test_ds.labels, predict_batch(model, test_ds.features)
    ):
        cm.add(true_label, predicted)
    log.info("split eval accuracy: %.1f%%", 100 * cm.overall_accuracy())
    meta = {"mode": "split", "kind": options["kind"],
            "train_filter": options["train_filter"], "test_filter": options["test_filter"],
            "n_train": len(train_ds), "n_test": len(test_ds),
            "features": list(subset) if subset else "all"}
    _write_eval_reports(cm, meta, out_dir, options["plot"])


def _eval_sweep(options: dict, out_dir: Path) -> None:
    _require(options, "manifest", "windows")
    windows = [float(w) for w in str(options["windows"]).split(",") if w.strip()]
    if not windows:
        raise UsageError("--windows must list at least one window length")
    rows = []
    for t_window in windows:
        per_window = dict(options, t_window=t_window)
        ds, _ = _dataset_from_manifest(options["manifest"], per_window)
        _, accuracy, per_class = kfold_cv(
            ds, int(options["folds"]), options["kind"],
            feature_subset=_parse_feature_list(options["features"]),
            seed=int(options["seed"]), k=int(options["knn_k"]),
        )
        rows.append({
            "t_window_s": t_window,
            "overall_accuracy": accuracy,
            "min_class_accuracy": min(per_class.values()),
        })
        log.info("window %.3f s: accuracy %.1f%%", t_window, 100 * accuracy)

    with open(out_dir / "window_sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["t_window_s", "overall_accuracy", "min_class_accuracy"]
        )
        writer.writeheader()
        for row in rows:
            writer.writerow({k: f"{v:.17g}" for k, v in row.items()})
    if options["plot"]:
        from . import plotting

        plotting.save_window_sweep(rows, out_dir / "window_sweep.png")


def cmd_eval(options: dict) -> int:
    _require(options, "out_dir")
    out_dir = Path(options["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    if options["sweep_window"]:
        _eval_sweep(options, out_dir)
    elif options["train_filter"] or options["test_filter"]:
        _require(options, "dataset")
        _eval_split(options, out_dir)
    else:
        _require(options, "dataset")
        _eval_cv(options, out_dir)
    return EXIT_OK


# --- sffs ----------------------------------------------------------------------

def cmd_sffs(options: dict) -> int:
    _require(options, "dataset", "out_dir")
    out_dir = Path(options["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    ds = load_dataset(options["dataset"])
    max_features = options["max_features"]
    result = sffs(
        ds, options["kind"], k_folds=int(options["folds"]), seed=int(options["seed"]),
        max_features=None if max_features is None else int(max_features),
        k=int(options["knn_k"]),
    )
    names = [ds.feature_names[i] for i in result.selected]
    log.info("selected %d features: %s", len(names), ", ".join(names))
    (out_dir / "sffs_selected.json").write_text(json.dumps({
        "selected_indices": list(result.selected),
        "selected_names": names,
        "criterion": result.criterion(),
        "kind": options["kind"], "folds": int(options["folds"]),
        "seed": int(options["seed"]),
    }, indent=2, sort_keys=True))
    with open(out_dir / "sffs_trace.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["step", "action", "feature",
                                                "feature_name", "criterion", "subset"])
        writer.writeheader()
        for step, entry in enumerate(result.trace, start=1):
            writer.writerow({
                "step": step, "action": entry["action"], "feature": entry["feature"],
                "feature_name": ds.feature_names[entry["feature"]],
                "criterion": f"{entry['criterion']:.17g}",
                "subset": " ".join(str(i) for i in entry["subset"]),
            })
    if options["plot"] and result.trace:
        from . import plotting

        plotting.save_sffs_trace(result.trace, out_dir / "sffs_trace.png")
    return EXIT_OK


# --- permtest ------------------------------------------------------------------

def cmd_permtest(options: dict) -> int:
    _require(options, "dataset", "out_dir")
    out_dir = Path(options["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    ds = load_dataset(options["dataset"])
    subset = _parse_feature_list(None if options["feature"] == "all" else options["feature"])
    indices = list(subset) if subset else list(range(ds.n_features))

    results = {}
    for index in indices:
        name = ds.feature_names[index]
        results[name] = permutation_test(
            ds.features[:, index], ds.labels,
            n_perm=int(options["n_perm"]),
            seed=_derived_seed(int(options["seed"]), index),
            n_bins=int(options["bins"]),
        )
        log.info("%s: observed JS %.4f, p = %.2e", name,
                 results[name].observed_js, results[name].p_value)

    joint = permutation_test_joint(
        ds.features[:, indices], ds.labels,
        n_perm=int(options["n_perm"]), seed=int(options["seed"]),
        n_bins=int(options["bins"]),
    )

    report = {
        "n_perm": int(options["n_perm"]), "n_bins": int(options["bins"]),
        "seed": int(options["seed"]),
        "features": {name: r.summary() for name, r in results.items()},
        "joint_mean_js": joint.summary(),
    }
    (out_dir / "permtest.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    with open(out_dir / "permtest.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["feature", "observed_js", "p_value",
                                                "null_mean", "null_std"])
        writer.writeheader()
        for name, r in results.items():
            s = r.summary()
            writer.writerow({
                "feature": name,
                "observed_js": f"{s['observed_js']:.17g}",
                "p_value": f"{s['p_value']:.17g}",
                "null_mean": f"{s['null_mean']:.17g}",
                "null_std": f"{s['null_std']:.17g}",
            })
    if options["plot"]:
        from . import plotting

        plotting.save_permutation_summary(results, out_dir / "permtest.png")
    return EXIT_OK


# --- parser --------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="roomecho", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file of option defaults")
        return p

    p = add("synth", "render a corpus of synthetic room impulse responses")
    p.add_argument("--specs", help="room-spec JSON (list of rooms)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--samples", type=int, help="responses per position (default 50)")
    p.add_argument("--positions", type=int, help="positions per room (default 2)")
    p.add_argument("--duration", type=float, help="response length in s (default 1.6)")
    p.add_argument("--fs", type=float, help="sample rate (default 44100)")
    p.add_argument("--format", choices=("csv", "wav"))
    p.add_argument("--seed", type=int)
    p.add_argument("--visit-id", dest="visit_id")
    p.add_argument("--pos-spread-db", dest="pos_spread_db", type=float,
                   help="direct/reverb offset between positions (default 1.0)")
    p.add_argument("--pnr-drop", dest="pnr_drop", type=float,
                   help="degrade: lower PNR by this many dB")
    p.add_argument("--bursts", type=int, help="degrade: transient bursts per response")
    p.add_argument("--burst-ms", dest="burst_ms", type=float)

    p = add("deconvolve", "recover impulse responses from MLS recordings")
    p.add_argument("--recordings", nargs="+", help="recording files or directories")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--order", type=int, help="MLS order (default 17)")
    p.add_argument("--n-reps", dest="n_reps", type=int, help="averaged periods (default 6)")
    p.add_argument("--fs", type=float, help="sample rate for CSV recordings")
    p.add_argument("--path", choices=("fft", "fht"), help="deconvolution route")
    p.add_argument("--no-discard-first", dest="discard_first", action="store_false",
                   help="keep the settling period in the average")
    p.add_argument("--format", choices=("csv", "wav"), help="output RIR format")

    def add_extraction_options(p):
        p.add_argument("--t-window", dest="t_window", type=float,
                       help="analysis window in s (default 1.5)")
        p.add_argument("--max-rt", dest="max_rt", type=float,
                       help="longest expected RT; warns if the window is shorter")
        p.add_argument("--naer-per-noise", dest="naer_per_noise", type=float)
        p.add_argument("--naer-threshold", dest="naer_threshold", type=float)
        p.add_argument("--naer-bond", dest="naer_bond", type=float)

    p = add("extract", "turn a corpus of impulse responses into a fingerprint dataset")
    p.add_argument("--manifest", help="corpus manifest.csv")
    p.add_argument("--out", help="output dataset CSV")
    add_extraction_options(p)

    p = add("train", "fit a classifier on a fingerprint dataset")
    p.add_argument("--dataset")
    p.add_argument("--out", help="output model JSON")
    p.add_argument("--kind", choices=("gaussian_nb", "knn"))
    p.add_argument("--features", help="comma list of feature names or indices")
    p.add_argument("--knn-k", dest="knn_k", type=int)

    p = add("eval", "evaluate identification accuracy (CV, filtered split, or window sweep)")
    p.add_argument("--dataset")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--kind", choices=("gaussian_nb", "knn"))
    p.add_argument("--folds", type=int, help="CV folds (default 10)")
    p.add_argument("--seed", type=int)
    p.add_argument("--features", help="comma list of feature names or indices")
    p.add_argument("--knn-k", dest="knn_k", type=int)
    p.add_argument("--train-filter", dest="train_filter",
                   help="train on matching rows, e.g. visit=1,noise=quiet")
    p.add_argument("--test-filter", dest="test_filter",
                   help="test on matching rows, e.g. noise=noisy")
    p.add_argument("--sweep-window", dest="sweep_window", action="store_true",
                   help="re-extract at several windows and tabulate accuracy")
    p.add_argument("--manifest", help="corpus manifest (sweep mode)")
    p.add_argument("--windows", help="comma list of window lengths in s (sweep mode)")
    p.add_argument("--plot", action="store_true", help="render figures next to reports")
    add_extraction_options(p)

    p = add("sffs", "sequential floating forward feature selection")
    p.add_argument("--dataset")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--kind", choices=("gaussian_nb", "knn"))
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-features", dest="max_features", type=int)
    p.add_argument("--knn-k", dest="knn_k", type=int)
    p.add_argument("--plot", action="store_true")

    p = add("permtest", "JS-divergence permutation test of feature distinctiveness")
    p.add_argument("--dataset")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--feature", help="feature name/index, comma list, or 'all'")
    p.add_argument("--n-perm", dest="n_perm", type=int, help="permutations (default 4999)")
    p.add_argument("--seed", type=int)
    p.add_argument("--bins", type=int, help="histogram bins (default 32)")
    p.add_argument("--plot", action="store_true")

    return parser


_COMMANDS = {
    "synth": cmd_synth,
    "deconvolve": cmd_deconvolve,
    "extract": cmd_extract,
    "train": cmd_train,
    "eval": cmd_eval,
    "sffs": cmd_sffs,
    "permtest": cmd_permtest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(levelname)s %(message)s",
            stream=sys.stderr,
        )
        options = _resolve(args.command, args)
        return _COMMANDS[args.command](options)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _USAGE_ERRORS as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
