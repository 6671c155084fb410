"""Command-line entry point: scene loading, check orchestration and reports.

Scene and report files are JSON. Complex scalars are ``[re, im]`` pairs and
matrices are row-major nested arrays. The default equality tolerance can be
overridden with the ``UHLMANNLAB_TOL`` environment variable.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

from . import algebra as alg
from . import duality
from .numerics import DEFAULT_TOL, DimensionError, Tolerances, ValidationError, InternalConsistencyError
from .states import as_density, as_state, fidelity, purify
from .toric import dense as toric_dense
from .toric import lattice as toric_lattice
from .toric.stabilizer import marginal_signature, pauli_connectivity

ENV_TOL = "UHLMANNLAB_TOL"
EXIT_OK, EXIT_CHECK_ERROR, EXIT_PRECONDITION = 0, 1, 2


class SceneError(ValueError):
    """Scene file failed schema or semantic validation; ``path`` locates the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def load_schema(name: str) -> dict:
    text = resources.files("uhlmannlab").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def _json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


# -- complex encoding ---------------------------------------------------------

def encode_complex(a) -> Any:
    """Nested ``[re, im]`` encoding of a complex scalar or array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [encode_complex(x) for x in arr]


def decode_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


# -- scenes ---------------------------------------------------------------------

@dataclass
class Scene:
    hilbert_dim: int
    algebras: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict)
    densities: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    description: str | None = None
    _specs: dict = field(default_factory=dict, repr=False)

    def algebra(self, name: str, tol: Tolerances):
        if name not in self._specs:
            raise SceneError(f"$.algebras.{name}", "no such algebra")
        key = (name, tol)
        if key not in self.algebras:
            self.algebras[key] = _build_algebra(self._specs[name], self.hilbert_dim, tol)
        return self.algebras[key]

    def state(self, name: str) -> np.ndarray:
        if name not in self.states:
            raise SceneError(f"$.states.{name}", "no such state")
        return self.states[name]

    def density(self, name: str) -> np.ndarray:
        if name not in self.densities:
            raise SceneError(f"$.densities.{name}", "no such density matrix")
        return self.densities[name]


def _build_algebra(spec: dict, n: int, tol: Tolerances):
    if "tensor_factor" in spec:
        tf = spec["tensor_factor"]
        return alg.TensorFactorAlgebra(tf["dims"], tf["sites"], tol)
    gens = [decode_complex(g) for g in spec["generators"]]
    return alg.generate_algebra(gens, n, tol)


def load_scene(data: dict, tol: Tolerances = DEFAULT_TOL) -> Scene:
    """Validate a parsed scene document and decode its arrays."""
    validator = jsonschema.Draft202012Validator(load_schema("scene"))
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SceneError(_json_path(err.absolute_path), err.message)
    n = data["hilbert_dim"]
    specs = data.get("algebras", {})
    for name, spec in specs.items():
        if "generators" in spec:
            for i, g in enumerate(spec["generators"]):
                _check_matrix(g, n, f"$.algebras.{name}.generators[{i}]")
        else:
            tf = spec["tensor_factor"]
            base = f"$.algebras.{name}.tensor_factor"
            if int(np.prod(tf["dims"])) != n:
                raise SceneError(f"{base}.dims", f"product of dims is not hilbert_dim {n}")
            if any(s >= len(tf["dims"]) for s in tf["sites"]):
                raise SceneError(f"{base}.sites", "site index out of range")
    states = {}
    for name, vec in data.get("states", {}).items():
        path = f"$.states.{name}"
        if len(vec) != n:
            raise SceneError(path, f"length {len(vec)} is not hilbert_dim {n}")
        try:
            states[name] = as_state(decode_complex(vec), tol)
        except ValidationError as exc:
            raise SceneError(path, str(exc)) from None
    densities = {}
    for name, mat in data.get("densities", {}).items():
        path = f"$.densities.{name}"
        _check_matrix(mat, None, path)
        densities[name] = decode_complex(mat)
    return Scene(n, {}, states, densities, dict(data.get("tolerances", {})),
                 data.get("description"), dict(specs))


def _check_matrix(mat, n: int | None, path: str):
    rows = len(mat)
    if n is not None and rows != n:
        raise SceneError(path, f"{rows} rows, expected {n}")
    for i, row in enumerate(mat):
        if len(row) != rows:
            raise SceneError(f"{path}[{i}]", f"row has {len(row)} entries, expected {rows}")


def scene_to_dict(scene: Scene) -> dict:
    """Canonical serialization; ``load_scene(scene_to_dict(s))`` reproduces ``s``."""
    out: dict = {"hilbert_dim": scene.hilbert_dim}
    if scene.description is not None:
        out["description"] = scene.description
    if scene._specs:
        out["algebras"] = scene._specs
    if scene.states:
        out["states"] = {k: encode_complex(v) for k, v in scene.states.items()}
    if scene.densities:
        out["densities"] = {k: encode_complex(v) for k, v in scene.densities.items()}
    if scene.tolerances:
        out["tolerances"] = scene.tolerances
    return out


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def read_scene(path: str, tol: Tolerances = DEFAULT_TOL) -> Scene:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SceneError("$", f"invalid JSON: {exc}") from None
    except OSError as exc:
        raise SceneError("$", f"cannot read scene: {exc}") from None
    return load_scene(data, tol)


# -- checks ---------------------------------------------------------------------

def _num(x):
    """JSON-safe conversion of numpy scalars and nested containers."""
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, np.ndarray):
        return _num(x.tolist())
    return x


def _check(name: str, verdict: str, residual=None, details=None, witness=None) -> dict:
    out = {"name": name, "verdict": verdict, "residual": None if residual is None else float(residual),
           "details": _num(details or {})}
    if witness is not None:
        out["witness"] = witness
    return out


def _error(name: str, exc: Exception) -> dict:
    out = _check(name, "error")
    out["error"] = f"{type(exc).__name__}: {exc}"
    out["details"] = {"kind": "precondition" if isinstance(exc, (duality.PreconditionError, ValidationError,
                                                                 DimensionError, SceneError,
                                                                 toric_lattice.GeometryError,
                                                                 toric_dense.QubitCapError)) else "internal"}
    return out


def _pf(ok: bool) -> str:
    return "pass" if ok else "fail"


def _witness_dict(w: duality.Witness) -> dict:
    return {
        "psi": encode_complex(w.psi),
        "phi": encode_complex(w.phi),
        "max_overlap": float(w.max_overlap),
        "connecting_unitary": encode_complex(w.connecting_unitary),
        "location": w.location,
    }


def _run(checks: list, name: str, fn):
    """Run one isolated check; failures of one never abort the rest."""
    try:
        result = fn()
    except (duality.TheoremViolationError, InternalConsistencyError) as exc:
        checks.append(_error(name, exc))
        return None
    except (duality.PreconditionError, ValidationError, DimensionError, SceneError,
            toric_lattice.GeometryError, toric_dense.QubitCapError) as exc:
        checks.append(_error(name, exc))
        return None
    if isinstance(result, dict):
        checks.append(result)
    elif isinstance(result, list):
        checks.extend(result)
    return result


def cmd_check(scene: Scene, a: str, b: str, tol: Tolerances, seed: int, samples: int) -> list:
    checks: list = []
    m_a, m_b = scene.algebra(a, tol), scene.algebra(b, tol)

    def commutation():
        defect, pair = alg.commutation_defect(m_a, m_b)
        if defect > tol.eq_tol:
            raise duality.NonCommutingError(defect, pair)
        return _check("commutation", "pass", defect, {"worst_pair": pair})

    if _run(checks, "commutation", commutation) is None:
        return checks

    def tomography():
        v = duality.check_local_tomography(m_a, m_b, tol)
        return _check("local_tomography", _pf(v.passed), v.residual, v.details)

    def haag():
        v = duality.check_haag_duality(m_a, m_b, tol)
        return _check("haag_duality", _pf(v.passed), v.residual, v.details)

    def theorem():
        rep = duality.verify_theorem_equivalence(m_a, m_b, seed, samples, tol)
        details = {
            "haag_duality": rep.haag_duality.passed,
            "samples": len(rep.overlaps),
            "min_max_overlap": min(rep.overlaps) if rep.overlaps else None,
        }
        witness = _witness_dict(rep.witness) if rep.witness is not None else None
        return _check("theorem_equivalence", _pf(rep.consistent), None, details, witness)

    _run(checks, "local_tomography", tomography)
    _run(checks, "haag_duality", haag)
    _run(checks, "theorem_equivalence", theorem)
    return checks


def cmd_uhlmann(scene: Scene, a: str, b: str, psi: str, phi: str, tol: Tolerances) -> list:
    checks: list = []

    def pair():
        m_a, m_b = scene.algebra(a, tol), scene.algebra(b, tol)
        res = duality.check_uhlmann_pair(m_a, m_b, scene.state(psi), scene.state(phi), tol)
        details = {
            "marginals_equal": res.marginals_equal,
            "marginal_deviation": res.marginal_deviation,
            "max_overlap": res.max_overlap,
            "optimizer": encode_complex(res.optimizer),
        }
        if res.intertwiner is not None:
            iso = res.intertwiner
            details["intertwiner"] = {
                "map_residual": iso.map_residual,
                "intertwiner_residual": iso.intertwiner_residual,
                "commutant_residual": iso.commutant_residual,
                "isometry_residual": iso.isometry_residual,
                "in_B": iso.in_mb,
                "in_B_residual": iso.in_mb_residual,
            }
        return _check("uhlmann_pair", res.verdict, 1.0 - res.max_overlap, details)

    _run(checks, "uhlmann_pair", pair)
    return checks


def cmd_fidelity(scene: Scene, rho: str, sigma: str, tol: Tolerances) -> list:
    checks: list = []

    def fid():
        r, s = as_density(scene.density(rho), tol), as_density(scene.density(sigma), tol)
        if r.shape != s.shape:
            raise DimensionError(f"density matrices of shapes {r.shape} and {s.shape}")
        f = fidelity(r, s, tol)
        pr, ps = purify(r, tol), purify(s, tol)
        n = r.shape[0]
        purifier = alg.TensorFactorAlgebra([n, n], [1], tol)
        ov = duality.max_overlap(purifier, pr, ps, tol)
        gap = abs(f - ov.value)
        details = {
            "fidelity": f,
            "max_overlap_purifications": ov.value,
            "purification_rho": encode_complex(pr),
            "purification_sigma": encode_complex(ps),
        }
        return _check("fidelity", _pf(gap <= 1e-8), gap, details)

    _run(checks, "fidelity", fid)
    return checks


def cmd_toric(L: int, demo: str, radius: int, separation: int, seed: int, tol: Tolerances) -> list:
    checks: list = []
    if demo == "dense-crosscheck":
        def cross():
            if L != 2:
                raise toric_dense.QubitCapError("the dense cross-check runs at L=2 only")
            r = toric_dense.dense_cross_check(L, seed=seed, tol=tol)
            r.pop("_objects")
            agree = max(r["engine_agreement"].values())
            return [
                _check("engine_agreement", _pf(agree <= 1e-12), agree, r["engine_agreement"]),
                _check("haag_duality", _pf(r["haag_duality"]["passed"]), r["haag_duality"]["residual"]),
                _check("intertwiner", _pf(r["intertwiner"]["map_residual"] <= 1e-8),
                       r["intertwiner"]["map_residual"], r["intertwiner"]),
                _check("A_connectivity_infeasible", _pf(not r["pauli_connectivity_A"]["feasible"]), None, {
                    "feasible": r["pauli_connectivity_A"]["feasible"],
                    "operator": r["pauli_connectivity_A"]["operator"],
                    "operator_schmidt_rank_A1_A2": r["operator_schmidt_rank_A1_A2"],
                }),
            ]
        _run(checks, "dense_crosscheck", cross)
        return checks

    def geometry():
        lat = toric_lattice.Lattice(L)
        return lat, toric_lattice.two_patch_regions(lat, radius, separation)

    def classes():
        lat, scene = geometry()
        pc = toric_lattice.purification_classes(lat, scene)
        d = pc.to_dict()
        gram_dev = float(np.max(np.abs(pc.gram - np.eye(4))))
        infeasible = not any(pc.connectivity.values())
        return [
            _check("gram_identity", _pf(gram_dev == 0.0), gram_dev, {"gram": d["gram"]}),
            _check("B_signatures_equal", _pf(pc.signatures_equal), None, {
                "signature_sizes": d["signature_sizes"],
                "matches_vacuum": d["signature_matches_vacuum"],
                "detectors": d["detectors"],
            }),
            _check("A_connectivity_infeasible", _pf(infeasible), None, {"feasible": d["connectivity_A"]}),
        ]

    def anyons():
        lat, scene = geometry()
        ground = toric_lattice.ground_state(lat)
        out = []
        for label in toric_lattice.SECTOR_LABELS:
            st = toric_lattice.anyon_pair_state(scene, ground, label)
            stars = [list(v) for v in lat.vertices() if st.expectation(lat.star(v)) == -1]
            plaqs = [list(f) for f in lat.faces() if st.expectation(lat.plaquette(f)) == -1]
            expect = 2 * ("e" in label), 2 * ("m" in label)
            ok = (len(stars), len(plaqs)) == expect
            sig_b = marginal_signature(st, scene.B.mask) == marginal_signature(ground, scene.B.mask)
            conn_b, _ = pauli_connectivity(ground, st, scene.B.mask)
            out.append(_check(f"anyons_{label}", _pf(ok), None, {
                "flipped_stars": stars,
                "flipped_plaquettes": plaqs,
                "B_signature_matches_ground": sig_b,
                "connected_from_ground_within_B": conn_b,
            }))
        return out

    _run(checks, demo, classes if demo == "classes" else anyons)
    return checks


# -- reports -------------------------------------------------------------------

def build_report(name: str, args: dict, tol: Tolerances, checks: list, elapsed: float | None = None) -> dict:
    report = {
        "command": {"name": name, "args": _num(args)},
        "tolerances": {"eq_tol": tol.eq_tol, "rank_tol": tol.rank_tol},
        "checks": checks,
    }
    if elapsed is not None:
        report["timing"] = {"total_seconds": elapsed}
    return report


def validate_report(report: dict):
    jsonschema.validate(report, load_schema("report"))


def render_text(report: dict) -> str:
    lines = [f"{report['command']['name']}: eq_tol={report['tolerances']['eq_tol']:g} "
             f"rank_tol={report['tolerances']['rank_tol']:g}"]
    for c in report["checks"]:
        res = "" if c.get("residual") is None else f" residual={c['residual']:.3e}"
        extra = f" ({c['error']})" if "error" in c else ""
        lines.append(f"  {c['name']}: {c['verdict']}{res}{extra}")
        if c.get("witness"):
            lines.append(f"    witness: max_overlap={c['witness']['max_overlap']:.6g}, {c['witness']['location']}")
    if "timing" in report:
        lines.append(f"  time: {report['timing']['total_seconds']:.3f}s")
    return "\n".join(lines) + "\n"


def exit_code(checks: list) -> int:
    kinds = [c["details"].get("kind") for c in checks if c["verdict"] == "error"]
    if not kinds:
        return EXIT_OK
    return EXIT_PRECONDITION if "precondition" in kinds else EXIT_CHECK_ERROR


# -- argument handling -----------------------------------------------------------

def _env_tol() -> float | None:
    raw = os.environ.get(ENV_TOL)
    if raw is None or raw.strip() == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise SceneError(f"${ENV_TOL}", f"not a decimal real: {raw!r}") from None


def resolve_tolerances(args, scene: Scene | None = None) -> Tolerances:
    """Flags beat scene overrides, which beat the environment, which beats the defaults."""
    eq, rank = DEFAULT_TOL.eq_tol, DEFAULT_TOL.rank_tol
    env = _env_tol()
    if env is not None:
        eq = env
    if scene is not None:
        eq = scene.tolerances.get("eq_tol", eq)
        rank = scene.tolerances.get("rank_tol", rank)
    if args.tol is not None:
        eq = args.tol
    if args.rank_tol is not None:
        rank = args.rank_tol
    try:
        return Tolerances(eq, rank)
    except ValueError as exc:
        raise SceneError("$.tolerances", str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="equality tolerance (default 1e-9)")
    common.add_argument("--rank-tol", type=float, default=None, help="rank tolerance (default 1e-10)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--report", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument("--no-timing", action="store_true", help="omit timing from the report")

    p = argparse.ArgumentParser(prog="uhlmannlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="tomography, duality and theorem checks for a pair")
    c.add_argument("scene")
    c.add_argument("A")
    c.add_argument("B")
    c.add_argument("--samples", type=int, default=20)

    u = sub.add_parser("uhlmann", parents=[common], help="maximal overlap and intertwiner for two states")
    u.add_argument("scene")
    for name in ("A", "B", "psi", "phi"):
        u.add_argument(name)

    f = sub.add_parser("fidelity", parents=[common], help="fidelity with purification cross-check")
    f.add_argument("scene")
    f.add_argument("rho")
    f.add_argument("sigma")

    t = sub.add_parser("toric", parents=[common], help="toric-code sector demos")
    t.add_argument("--L", type=int, required=True)
    t.add_argument("--demo", choices=("anyons", "classes", "dense-crosscheck"), default="classes")
    t.add_argument("--radius", type=int, default=1)
    t.add_argument("--separation", type=int, default=2)
    return p


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n" if args.format == "json" else render_text(report)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> tuple[int, dict | None]:
    """Parse ``argv``, run the command and emit its report. Returns (exit code, report)."""
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        if args.command == "toric":
            if args.L < 2:
                raise toric_lattice.GeometryError(f"torus size must be at least 2, got {args.L}")
            tol = resolve_tolerances(args)
            checks = cmd_toric(args.L, args.demo, args.radius, args.separation, args.seed, tol)
            cmd_args = {"L": args.L, "demo": args.demo, "radius": args.radius,
                        "separation": args.separation, "seed": args.seed}
        else:
            tol0 = resolve_tolerances(args)
            scene = read_scene(args.scene, tol0)
            tol = resolve_tolerances(args, scene)
            if args.command == "check":
                checks = cmd_check(scene, args.A, args.B, tol, args.seed, args.samples)
                cmd_args = {"scene": args.scene, "A": args.A, "B": args.B, "seed": args.seed,
                            "samples": args.samples}
            elif args.command == "uhlmann":
                checks = cmd_uhlmann(scene, args.A, args.B, args.psi, args.phi, tol)
                cmd_args = {"scene": args.scene, "A": args.A, "B": args.B, "psi": args.psi, "phi": args.phi}
            else:
                checks = cmd_fidelity(scene, args.rho, args.sigma, tol)
                cmd_args = {"scene": args.scene, "rho": args.rho, "sigma": args.sigma}
    except (SceneError, toric_lattice.GeometryError) as exc:
        sys.stderr.write(f"uhlmannlab: error: {exc}\n")
        return EXIT_PRECONDITION, None
    elapsed = None if args.no_timing else time.perf_counter() - start
    report = build_report(args.command, cmd_args, tol, checks, elapsed)
    validate_report(report)
    _emit(report, args)
    return exit_code(checks), report


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
