"""Experiment spec files and the runners behind the command line.

A spec file is YAML with these top-level keys (unknown keys are errors)::

    name: schottky-strong          # artifact stem
    seed: 0                        # optional, default 0
    family:   {kind: ..., ...}     # a single representation, or
    sequence: {kind: ..., ...}     # a sequence rho_1, rho_2, ... -> rho_inf
    image:    {width: 512, ...}    # optional, used by render
    experiments:
      - {kind: render, depth: 10}
      - {kind: uep, N_max: 30, depth_cap: 31}

Complex parameters are numbers or ``[re, im]`` pairs.  See the README for
every kind and its options.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .ctmap import (
    DiagnosticsTable,
    convergence_report,
    ep_diagnostic,
    fixed_point_path,
    floyd_fit,
    geometric_limit_match,
    uep_table,
    uepp_table,
)
from .families import (
    CyclicSchedule,
    Representation,
    RepSequence,
    constant_sequence,
    cyclic_limits,
    cyclic_representation,
    cyclic_sequence,
    geometric_schedule,
    linear_schedule,
    punctured_torus,
    strong_sequence,
    symmetric_schottky,
)
from .limitset import (
    ImageSpec,
    LimitSample,
    LimitSetError,
    hausdorff_chordal,
    ppm_bytes,
    render,
    sample_fixed_points,
    sample_orbit,
)
from .words import inverse


class SpecError(ValueError):
    pass


TOP_KEYS = {"name", "seed", "family", "sequence", "experiments", "image"}
FAMILY_KEYS = {
    "schottky-symmetric": {"center", "radius"},
    "punctured-torus": {"x", "y", "root"},
    "cyclic-remark57": {"n", "power", "sigma", "eps_coeff"},
}
SEQUENCE_KEYS = {
    "strong": {"base", "target", "n_max", "schedule", "rate"},
    "cyclic": {"n_min", "n_max", "power", "sigma", "eps_coeff"},
    "constant": {"family", "n_max"},
}
EXPERIMENT_KEYS = {
    "render": {"mode", "depth"},
    "hausdorff-curve": {"depth"},
    "ct-converge": {"grid", "grid_depth", "grid_dedup", "grid_words", "ct_depth", "window", "uep_N_max", "uep_depth_cap"},
    "uep": {"N_max", "depth_cap", "beam_width"},
    "uepp": {"N_max", "delta", "samples"},
    "ep": {"word", "N_max", "path_depth", "k0"},
    "floyd": {"depth"},
    "geom-verify": {"index", "delta0", "depth_cap", "candidates"},
}
IMAGE_KEYS = {"width", "height", "projection", "window", "background", "near_color", "far_color"}
PRESETS = ("fuchsian-333", "schottky-strong", "cyclic-remark57", "constant-seq")


def _check_keys(d, allowed: set[str], where: str) -> None:
    if not isinstance(d, dict):
        raise SpecError(f"{where}: expected a mapping")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise SpecError(f"{where}: unknown keys {unknown}")


def _complex(v, where: str) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    raise SpecError(f"{where}: expected a number or [re, im]")


@dataclass
class ExperimentSpec:
    name: str
    seed: int
    family: dict | None
    sequence: dict | None
    experiments: list[dict]
    image: dict = field(default_factory=dict)
    hash: str = ""

    def canonical(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "family": self.family,
            "sequence": self.sequence,
            "experiments": self.experiments,
            "image": self.image,
        }


def spec_hash(data: dict) -> str:
    text = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def preset_path(name: str) -> Path:
    return Path(str(resources.files("ctlab.presets").joinpath(f"{name}.yaml")))


def load_spec(source: str | Path, seed: int | None = None) -> ExperimentSpec:
    """Parse a spec file (or a shipped preset name) and validate every key."""
    path = Path(source)
    if not path.exists() and str(source) in PRESETS:
        path = preset_path(str(source))
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec {source}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"malformed spec: {exc}") from exc
    return parse_spec(data, seed)


def parse_spec(data, seed: int | None = None) -> ExperimentSpec:
    _check_keys(data, TOP_KEYS, "spec")
    if "experiments" not in data or not data["experiments"]:
        raise SpecError("spec: at least one experiment is required")
    if data.get("family") is None and data.get("sequence") is None:
        raise SpecError("spec: needs a family or a sequence")
    if data.get("family") is not None:
        _check_family(data["family"], "family")
    if data.get("sequence") is not None:
        _check_sequence(data["sequence"])
    if not isinstance(data["experiments"], list):
        raise SpecError("experiments: expected a list")
    for i, e in enumerate(data["experiments"]):
        if not isinstance(e, dict) or e.get("kind") not in EXPERIMENT_KEYS:
            raise SpecError(f"experiments[{i}]: kind must be one of {sorted(EXPERIMENT_KEYS)}")
        _check_keys(e, EXPERIMENT_KEYS[e["kind"]] | {"kind"}, f"experiments[{i}]")
    image = data.get("image") or {}
    _check_keys(image, IMAGE_KEYS, "image")
    s = data.get("seed", 0) if seed is None else seed
    if not isinstance(s, int) or s < 0 or s >= 2**64:
        raise SpecError("seed must be an unsigned 64-bit integer")
    spec = ExperimentSpec(
        str(data.get("name", "experiment")),
        s,
        data.get("family"),
        data.get("sequence"),
        list(data["experiments"]),
        image,
    )
    spec.hash = spec_hash(spec.canonical())
    return spec


def _check_family(d, where: str) -> None:
    if not isinstance(d, dict) or d.get("kind") not in FAMILY_KEYS:
        raise SpecError(f"{where}: kind must be one of {sorted(FAMILY_KEYS)}")
    _check_keys(d, FAMILY_KEYS[d["kind"]] | {"kind"}, where)


def _check_sequence(d) -> None:
    if not isinstance(d, dict) or d.get("kind") not in SEQUENCE_KEYS:
        raise SpecError(f"sequence: kind must be one of {sorted(SEQUENCE_KEYS)}")
    _check_keys(d, SEQUENCE_KEYS[d["kind"]] | {"kind"}, "sequence")
    if d["kind"] == "strong":
        _check_family(d.get("base"), "sequence.base")
        _check_family(d.get("target"), "sequence.target")
    if d["kind"] == "constant":
        _check_family(d.get("family"), "sequence.family")


# ---------------------------------------------------------------------------
# building families


def _schedule(d: dict) -> CyclicSchedule:
    sched = CyclicSchedule(int(d.get("power", 2)), float(d.get("sigma", 1.0)), float(d.get("eps_coeff", 1.0)))
    sched.validate()
    return sched


def build_family(d: dict) -> Representation:
    kind = d["kind"]
    if kind == "schottky-symmetric":
        return symmetric_schottky(float(d.get("center", 3.0)), float(d.get("radius", 1.0)))
    if kind == "punctured-torus":
        return punctured_torus(_complex(d["x"], "x"), _complex(d["y"], "y"), d.get("root", "smaller"))
    return cyclic_representation(d.get("n"), _schedule(d))


def build_sequence(d: dict) -> RepSequence:
    kind = d["kind"]
    n_max = int(d.get("n_max", 32))
    if kind == "strong":
        sched = linear_schedule() if d.get("schedule") == "linear" else geometric_schedule(float(d.get("rate", 2**-0.25)))
        return strong_sequence(build_family(d["base"]), build_family(d["target"]), n_max, sched)
    if kind == "cyclic":
        return cyclic_sequence(n_max, _schedule(d), int(d.get("n_min", 1)))
    seq = constant_sequence(build_family(d["family"]), n_max)
    return seq


def spec_representation(spec: ExperimentSpec) -> Representation:
    if spec.family is not None:
        return build_family(spec.family)
    return build_sequence(spec.sequence).limit


def spec_sequence(spec: ExperimentSpec) -> RepSequence:
    if spec.sequence is None:
        raise SpecError("this experiment needs a sequence")
    return build_sequence(spec.sequence)


# ---------------------------------------------------------------------------
# runners: each returns a list of (suffix, DiagnosticsTable | LimitSample)


def grid_words(rep: Representation, size: int, depth: int, seed: int, dedup_tol: float = 1e-12) -> list[str]:
    """Words w whose attracting fixed points w+ form a seeded sub-sample of the fixed-point sample."""
    sample = sample_fixed_points(rep, depth, dedup_tol=dedup_tol)
    words = []
    seen = set()
    for w in sample.words:
        g = w[:-1] if w.endswith("+") else inverse(w[:-1])
        if g not in seen:
            seen.add(g)
            words.append(g)
    if len(words) > size:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(len(words), size, replace=False))
        words = [words[i] for i in pick]
    return words


def run_render(spec, e, jobs=1):
    rep = spec_representation(spec)
    depth = int(e.get("depth", 10))
    sample = sample_orbit(rep, depth) if e.get("mode", "fixed-point") == "orbit" else sample_fixed_points(rep, depth)
    if len(sample) == 0:
        raise LimitSetError("empty sample")
    return [("points", sample)]


def run_hausdorff(spec, e, jobs=1):
    seq = spec_sequence(spec)
    depth = int(e.get("depth", 10))
    ref = sample_fixed_points(seq.limit, depth)
    h = [hausdorff_chordal(sample_fixed_points(seq[n], depth), ref) for n in range(1, len(seq) + 1)]
    tail = h[-8:]
    dec = all(y < x for x, y in zip(tail, tail[1:])) or max(tail) == 0.0
    meta = {"depth": depth, "decreasing_last_8": dec, "sequence": seq.name}
    return [("hausdorff", DiagnosticsTable("n", list(range(1, len(seq) + 1)), {"hausdorff": h}, meta))]


def run_converge(spec, e, jobs=1):
    seq = spec_sequence(spec)
    if "grid_words" in e:
        grid = [str(w) for w in e["grid_words"]]
    else:
        grid = grid_words(
            seq.limit, int(e.get("grid", 200)), int(e.get("grid_depth", 12)), spec.seed, float(e.get("grid_dedup", 1e-12))
        )
    table = convergence_report(seq, grid, int(e.get("ct_depth", 40)), window=int(e.get("window", 5)), jobs=jobs)
    if "uep_N_max" in e:
        u = uep_table(seq, int(e["uep_N_max"]), int(e.get("uep_depth_cap", int(e["uep_N_max"]) + 1)))
        table.metadata["uep_flag"] = "UEP-" + u.metadata["flag"]
        table.metadata["uep_max"] = max(u.column("u_N"))
    return [("converge", table)]


def run_uep(spec, e, jobs=1):
    seq = spec_sequence(spec)
    t = uep_table(seq, int(e.get("N_max", 10)), int(e.get("depth_cap", 12)), int(e.get("beam_width", 64)))
    t.metadata["flag"] = "UEP-" + t.metadata["flag"]
    return [("uep", t)]


def run_uepp(spec, e, jobs=1):
    seq = spec_sequence(spec)
    t = uepp_table(seq, int(e.get("N_max", 8)), int(e.get("delta", 4)), int(e.get("samples", 32)), spec.seed)
    t.metadata["flag"] = "UEPP-" + t.metadata["flag"]
    return [("uepp", t)]


def run_ep(spec, e, jobs=1):
    seq = spec_sequence(spec)
    path = fixed_point_path(str(e.get("word", "a")), int(e.get("path_depth", 30)))
    return [("ep", ep_diagnostic(seq, path, int(e.get("N_max", 10)), int(e.get("k0", 2))))]


def run_floyd(spec, e, jobs=1):
    rep = spec_representation(spec)
    depth = int(e.get("depth", 10))
    fit = floyd_fit(rep, depth)
    meta = {"a": fit.a, "b": fit.b, "k": fit.k, "parabolic": fit.parabolic, "depth": depth}
    cols = {"min_ratio": fit.min_ratio, "max_ratio": fit.max_ratio, "min_distance": fit.min_distance}
    return [("floyd", DiagnosticsTable("length", list(range(1, depth + 1)), cols, meta))]


def run_geom(spec, e, jobs=1):
    seq = spec_sequence(spec)
    n = int(e.get("index", len(seq)))
    which = e.get("candidates", "generators")
    if which == "cyclic-limits":
        if spec.sequence.get("kind") != "cyclic":
            raise SpecError("cyclic-limits candidates need a cyclic sequence")
        P, Q = cyclic_limits(_schedule(spec.sequence))
        cands = [P, Q]
    elif which == "generators":
        cands = list(seq.limit.generators)
    else:
        raise SpecError("candidates must be 'generators' or 'cyclic-limits'")
    default_cap = 500 if seq.limit.rank == 1 else 6
    res = geometric_limit_match(seq, n, cands, float(e.get("delta0", 0.5)), int(e.get("depth_cap", default_cap)))
    cols = {
        "word": [m.word if m.word is not None else "" for m in res],
        "word_length": [len(m.word) if m.word is not None else -1 for m in res],
        "distance": [m.distance for m in res],
        "violations": [len(m.violations) for m in res],
    }
    meta = {"index": n, "candidates": which, "delta0": float(e.get("delta0", 0.5))}
    return [("geom", DiagnosticsTable("candidate", [m.candidate for m in res], cols, meta))]


RUNNERS = {
    "render": run_render,
    "hausdorff-curve": run_hausdorff,
    "ct-converge": run_converge,
    "uep": run_uep,
    "uepp": run_uepp,
    "ep": run_ep,
    "floyd": run_floyd,
    "geom-verify": run_geom,
}


# ---------------------------------------------------------------------------
# artifacts


def _header(spec: ExperimentSpec) -> str:
    return f"# ctlab {__version__} spec {spec.hash} seed {spec.seed}\n"


def image_spec(spec: ExperimentSpec) -> ImageSpec:
    d = dict(spec.image)
    for k in ("window", "background", "near_color", "far_color"):
        if k in d:
            d[k] = tuple(d[k])
    try:
        return ImageSpec(**d)
    except TypeError as exc:
        raise SpecError(f"image: {exc}") from exc


def write_artifacts(spec: ExperimentSpec, kind: str, results, out: Path, formats: set[str]) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for suffix, obj in results:
        stem = out / f"{spec.name}-{kind}-{suffix}"
        if isinstance(obj, LimitSample):
            img = render(obj, image_spec(spec))
            if "ppm" in formats:
                data = ppm_bytes(img).replace(b"P6\n", f"P6\n{_header(spec)}".encode(), 1)
                p = stem.with_suffix(".ppm")
                p.write_bytes(data)
                written.append(p)
            if "png" in formats:
                from PIL import Image
                from PIL.PngImagePlugin import PngInfo

                info = PngInfo()
                info.add_text("ctlab", _header(spec).strip("# \n"))
                p = stem.with_suffix(".png")
                Image.fromarray(img).save(p, format="PNG", pnginfo=info)
                written.append(p)
            if "csv" in formats:
                p = stem.with_suffix(".csv")
                p.write_text(_header(spec) + obj.to_csv())
                written.append(p)
            continue
        obj.metadata.update({"spec_hash": spec.hash, "version": __version__, "seed": spec.seed, "kind": kind})
        if "csv" in formats:
            p = stem.with_suffix(".csv")
            p.write_text(_header(spec) + obj.to_csv())
            written.append(p)
        if "json" in formats:
            p = stem.with_suffix(".json")
            p.write_text(obj.to_json())
            written.append(p)
    return written


def run_spec(
    spec: ExperimentSpec, out: Path, formats: set[str], kinds: set[str] | None = None, jobs: int = 1
) -> tuple[list[Path], list[tuple[str, object]]]:
    files, results = [], []
    for e in spec.experiments:
        if kinds is not None and e["kind"] not in kinds:
            continue
        res = RUNNERS[e["kind"]](spec, e, jobs)
        results.extend((e["kind"], obj) for _, obj in res)
        files.extend(write_artifacts(spec, e["kind"], res, out, formats))
    return files, results
