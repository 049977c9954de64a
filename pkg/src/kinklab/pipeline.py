"""Config-driven staged runs with file-based artifacts and a manifest.

A run executes stages in a fixed order (seed, relax, modes, couplings,
classical, quantum), each reading the artifacts of earlier stages from the
output directory and writing its own.  A manifest records input hashes,
output hashes, versions and wall time per stage; a stage whose inputs and
outputs are unchanged is skipped on re-run unless forced.  All CSV floats
are written with 17 significant digits so identical configs reproduce
byte-identical series.
"""

from __future__ import annotations

import hashlib
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .couplings import CouplingTensors, transform
from .dynamics import SimConfig, default_dt, dft, energy_drift, integrate, \
    mode_series, phonon_kick, thermal_state
from .errors import ConfigError, NumericalError
from .models import ModelSpec, derivatives, continuum_seed
from .modes import DEFAULT_GAP_FACTOR, ModeBasis, classify, normal_modes, \
    resonances
from .relax import DEFAULT_TOL, MAX_ITERS, Equilibrium, relax
from .quantum import FULL_TWO_MODE, LOW_MODE_IN_BATH, TRUNCATED_KERNEL, \
    SystemDef, build_fock_operators, build_system_hamiltonian, \
    default_initial_state, evolve, fidelity, rabi_reference, reduce_mode, \
    renormalize

STAGES = ("seed", "relax", "modes", "couplings", "classical", "quantum")

# artifacts each stage reads, and which stage produces them
_STAGE_INPUTS = {
    "seed": (),
    "relax": ("seed.json",),
    "modes": ("equilibrium.json",),
    "couplings": ("equilibrium.json", "modes.npz"),
    "classical": ("equilibrium.json", "modes.npz"),
    "quantum": ("modes.npz", "couplings.npz"),
}
_PRODUCER = {
    "seed.json": "seed",
    "equilibrium.json": "relax",
    "modes.npz": "modes",
    "couplings.npz": "couplings",
}

_TOP_KEYS = {"model", "output_dir", "stages", "seed", "relax", "modes",
             "couplings", "classical", "quantum", "rng_seed"}
_SEED_KEYS = {"center"}
_RELAX_KEYS = {"tol", "max_iters"}
_MODES_KEYS = {"gap_factor"}
_COUPLINGS_KEYS = {"threshold"}
_CLASSICAL_KEYS = {"dt", "steps", "periods", "record_every", "hbar",
                   "temperature", "sample_occupations", "mode_overrides",
                   "excitation"}
_QUANTUM_KEYS = {"sys_modes", "dims", "hbar", "temperature", "variants",
                 "tau_c", "rabi_periods", "dt", "record_every"}


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"corrupt JSON in {path}: {exc}") from exc


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _canonical_hash(obj) -> str:
    text = json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _check_keys(block: dict, allowed: set, where: str) -> None:
    for key in block:
        if key not in allowed:
            raise ConfigError(f"unknown config key: {where}.{key}")


@dataclass
class RunConfig:
    """Everything one pipeline run needs, parsed from a single JSON file."""

    model: ModelSpec
    output_dir: str
    stages: list = field(default_factory=lambda: list(STAGES[:3]))
    seed_center: float | None = None
    relax_tol: float = DEFAULT_TOL
    relax_max_iters: int = MAX_ITERS
    gap_factor: float = DEFAULT_GAP_FACTOR
    coupling_threshold: float | None = None
    classical: dict | None = None
    quantum: dict | None = None
    rng_seed: int = 0

    def __post_init__(self):
        last = -1
        for st in self.stages:
            if st not in STAGES:
                raise ConfigError(f"unknown stage: {st!r}")
            idx = STAGES.index(st)
            if idx <= last:
                raise ConfigError("stages must be unique and pipeline-ordered")
            last = idx
        if not self.stages:
            raise ConfigError("stage list is empty")

    def to_json_dict(self) -> dict:
        doc = {
            "model": self.model.to_json_dict(),
            "output_dir": self.output_dir,
            "stages": list(self.stages),
            "rng_seed": self.rng_seed,
            "seed": {"center": self.seed_center},
            "relax": {"tol": self.relax_tol, "max_iters": self.relax_max_iters},
            "modes": {"gap_factor": self.gap_factor},
            "couplings": {"threshold": self.coupling_threshold},
        }
        if self.classical is not None:
            doc["classical"] = dict(self.classical)
        if self.quantum is not None:
            doc["quantum"] = dict(self.quantum)
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        _check_keys(doc, _TOP_KEYS, "config")
        for key in ("model", "output_dir"):
            if key not in doc:
                raise ConfigError(f"missing config key: {key}")
        model = ModelSpec.from_json_dict(doc["model"])

        seed_block = doc.get("seed") or {}
        _check_keys(seed_block, _SEED_KEYS, "seed")
        relax_block = doc.get("relax") or {}
        _check_keys(relax_block, _RELAX_KEYS, "relax")
        modes_block = doc.get("modes") or {}
        _check_keys(modes_block, _MODES_KEYS, "modes")
        coup_block = doc.get("couplings") or {}
        _check_keys(coup_block, _COUPLINGS_KEYS, "couplings")
        classical = doc.get("classical")
        if classical is not None:
            _check_keys(classical, _CLASSICAL_KEYS, "classical")
        quantum = doc.get("quantum")
        if quantum is not None:
            _check_keys(quantum, _QUANTUM_KEYS, "quantum")

        stages = doc.get("stages")
        if stages is None:
            wanted = {"seed", "relax", "modes"}
            if classical is not None:
                wanted.add("classical")
            if quantum is not None:
                wanted.update(("couplings", "quantum"))
            stages = [st for st in STAGES if st in wanted]
        center = seed_block.get("center")
        return cls(
            model=model,
            output_dir=str(doc["output_dir"]),
            stages=list(stages),
            seed_center=None if center is None else float(center),
            relax_tol=float(relax_block.get("tol", DEFAULT_TOL)),
            relax_max_iters=int(relax_block.get("max_iters", MAX_ITERS)),
            gap_factor=float(modes_block.get("gap_factor", DEFAULT_GAP_FACTOR)),
            coupling_threshold=(None if coup_block.get("threshold") is None
                                else float(coup_block["threshold"])),
            classical=classical,
            quantum=quantum,
            rng_seed=int(doc.get("rng_seed", 0)),
        )

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_json_dict(_load_json(path))


def _save_basis(path: Path, basis: ModeBasis) -> None:
    np.savez(
        path,
        freqs=basis.freqs,
        vectors=basis.vectors,
        participation=basis.participation,
        localized=np.array(basis.localized, dtype=np.int64),
        end_modes=np.array(basis.end_modes, dtype=np.int64),
    )


def load_basis(path) -> ModeBasis:
    with np.load(path) as data:
        return ModeBasis(
            freqs=data["freqs"].copy(),
            vectors=data["vectors"].copy(),
            localized=[int(v) for v in data["localized"]],
            participation=data["participation"].copy(),
            end_modes=[int(v) for v in data["end_modes"]],
        )


def _resolve_mode(token, basis: ModeBasis) -> int:
    """Map 'high'/'low' or a 1-based mode number to a column index."""
    if isinstance(token, str):
        name = token.strip().lower()
        if name in ("high", "low"):
            hi, lo = basis.localized_high_low()
            return hi if name == "high" else lo
        raise ConfigError(f"unknown mode name: {token!r}")
    idx = int(token) - 1
    if not 0 <= idx < basis.n:
        raise ConfigError(f"mode number {token} out of range 1..{basis.n}")
    return idx


class Pipeline:
    """Run stages against one output directory, maintaining the manifest."""

    def __init__(self, config: RunConfig, force: bool = False, log=None):
        self.cfg = config
        self.out = Path(config.output_dir)
        self.force = force
        self.log = log or (lambda msg: None)
        doc = config.to_json_dict()
        doc.pop("output_dir")  # relocating a run must not invalidate it
        self.config_hash = _canonical_hash(doc)

    # -- manifest ---------------------------------------------------------

    def _manifest_path(self) -> Path:
        return self.out / "manifest.json"

    def _load_manifest(self) -> dict:
        path = self._manifest_path()
        if path.exists():
            try:
                doc = json.loads(path.read_text())
                if isinstance(doc, dict):
                    doc.setdefault("stages", {})
                    return doc
            except json.JSONDecodeError:
                pass
        return {"stages": {}}

    def _save_manifest(self, manifest: dict) -> None:
        manifest["config_hash"] = self.config_hash
        manifest["config"] = self.cfg.to_json_dict()
        manifest["rng_seed"] = self.cfg.rng_seed
        manifest["versions"] = {
            "kinklab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        }
        _dump_json(self._manifest_path(), manifest)

    def _stage_inputs(self, name: str) -> dict:
        inputs = {"config": self.config_hash}
        for artifact in _STAGE_INPUTS[name]:
            path = self.out / artifact
            if not path.exists():
                raise ConfigError(
                    f"stage '{name}' needs {artifact}; run stage "
                    f"'{_PRODUCER[artifact]}' first"
                )
            inputs[artifact] = _sha256_file(path)
        return inputs

    def _is_fresh(self, entry, inputs) -> bool:
        if not entry or entry.get("status") != "ok":
            return False
        if entry.get("inputs") != inputs:
            return False
        outputs = entry.get("outputs", {})
        if not outputs:
            return False
        for name, digest in outputs.items():
            path = self.out / name
            if not path.exists() or _sha256_file(path) != digest:
                return False
        return True

    # -- driver -----------------------------------------------------------

    def run(self, only: str | None = None) -> dict:
        """Execute the configured stages (or a single one); return statuses."""
        self.out.mkdir(parents=True, exist_ok=True)
        manifest = self._load_manifest()
        if only is not None and only not in STAGES:
            raise ConfigError(f"unknown stage: {only!r}")
        stages = [only] if only is not None else list(self.cfg.stages)
        statuses = {}
        for name in stages:
            inputs = self._stage_inputs(name)
            if not self.force and self._is_fresh(manifest["stages"].get(name), inputs):
                statuses[name] = "skipped"
                self.log(f"stage {name}: skipped (up to date)")
                continue
            start = time.perf_counter()
            try:
                outputs = getattr(self, "_stage_" + name)()
            except Exception as exc:
                manifest["stages"][name] = {
                    "status": "failed",
                    "error": f"{type(exc).__name__}: {exc}",
                    "inputs": inputs,
                    "wall_time_s": time.perf_counter() - start,
                }
                self._save_manifest(manifest)
                raise
            manifest["stages"][name] = {
                "status": "ok",
                "inputs": inputs,
                "outputs": {f: _sha256_file(self.out / f) for f in outputs},
                "wall_time_s": time.perf_counter() - start,
            }
            self._save_manifest(manifest)
            statuses[name] = "ok"
            self.log(f"stage {name}: ok "
                     f"({manifest['stages'][name]['wall_time_s']:.2f} s)")
        return statuses

    # -- stages -----------------------------------------------------------

    def _stage_seed(self) -> list:
        positions = continuum_seed(self.cfg.model, self.cfg.seed_center)
        _dump_json(self.out / "seed.json", {
            "model": self.cfg.model.to_json_dict(),
            "center": self.cfg.seed_center,
            "positions": positions,
        })
        return ["seed.json"]

    def _stage_relax(self) -> list:
        doc = _load_json(self.out / "seed.json")
        eq = relax(
            self.cfg.model,
            np.asarray(doc["positions"], dtype=float),
            tol=self.cfg.relax_tol,
            max_iters=self.cfg.relax_max_iters,
        )
        _dump_json(self.out / "equilibrium.json", eq.to_json_dict())
        return ["equilibrium.json"]

    def _stage_modes(self) -> list:
        eq = Equilibrium.from_json_dict(_load_json(self.out / "equilibrium.json"))
        bundle = derivatives(self.cfg.model, eq.positions)
        basis = classify(normal_modes(bundle.hessian), self.cfg.gap_factor)
        _save_basis(self.out / "modes.npz", basis)

        loc = set(basis.localized)
        ends = set(basis.end_modes)
        rows = []
        for j in range(basis.n):
            rows.append((
                str(j + 1),
                _fmt(basis.freqs[j]),
                _fmt(basis.participation[j]),
                str(int(j in loc)),
                str(int(j in ends)),
            ))
        _write_csv(self.out / "spectrum.csv",
                   ("mode", "frequency", "participation", "localized",
                    "end_mode"), rows)

        band = [j for j in range(basis.n) if j not in loc and j not in ends]
        band_freqs = basis.freqs[band]
        spacing = float(np.median(-np.diff(band_freqs))) if len(band) > 1 else 0.0
        summary = {
            "n_modes": basis.n,
            "localized": [
                {
                    "mode": basis.mode_number(j),
                    "frequency": basis.freqs[j],
                    "participation": basis.participation[j],
                    "gap_to_band": (float(band_freqs[-1] - basis.freqs[j])
                                    if len(band) and basis.freqs[j] < band_freqs[-1]
                                    else float(basis.freqs[j] - band_freqs[0])
                                    if len(band) else None),
                }
                for j in basis.localized
            ],
            "end_modes": [basis.mode_number(j) for j in basis.end_modes],
            "band": {
                "top": float(band_freqs[0]) if len(band) else None,
                "bottom": float(band_freqs[-1]) if len(band) else None,
                "median_spacing": spacing,
            },
        }
        if len(basis.localized) >= 2:
            hi, lo = basis.localized_high_low()
            report = resonances(basis, hi, lo)
            summary["resonances"] = report.to_json_dict()
        _dump_json(self.out / "modes.json", summary)
        return ["modes.npz", "spectrum.csv", "modes.json"]

    def _stage_couplings(self) -> list:
        eq = Equilibrium.from_json_dict(_load_json(self.out / "equilibrium.json"))
        basis = load_basis(self.out / "modes.npz")
        bundle = derivatives(self.cfg.model, eq.positions)
        tensors = transform(bundle, basis, self.cfg.coupling_threshold)
        tensors.save(self.out / "couplings.npz")

        def strongest(keys, vals, norm, count=10):
            order = np.argsort(-np.abs(vals), kind="stable")[:count]
            return [
                {
                    "modes": [int(k) + 1 for k in keys[t]],
                    "value": float(vals[t]),
                    "strength": float(abs(vals[t]) / norm),
                }
                for t in order
            ]

        _dump_json(self.out / "couplings.json", {
            "n_modes": tensors.n,
            "n_third": int(len(tensors.third_vals)),
            "n_fourth": int(len(tensors.fourth_vals)),
            "threshold_third": tensors.threshold_third,
            "threshold_fourth": tensors.threshold_fourth,
            "strongest_third": strongest(
                tensors.third_keys, tensors.third_vals, 6.0),
            "strongest_fourth": strongest(
                tensors.fourth_keys, tensors.fourth_vals, 24.0),
        })
        return ["couplings.npz", "couplings.json"]

    def _stage_classical(self) -> list:
        block = self.cfg.classical
        if block is None:
            raise ConfigError("classical stage requires a 'classical' config block")
        eq = Equilibrium.from_json_dict(_load_json(self.out / "equilibrium.json"))
        basis = load_basis(self.out / "modes.npz")

        dt = block.get("dt")
        dt = float(dt) if dt is not None else default_dt(basis)
        if "steps" in block:
            steps = int(block["steps"])
        elif "periods" in block:
            # "periods" counts oscillations of the highest localized mode
            # (the usual excitation target), or of the slowest mode when
            # nothing is localized.
            if len(basis.localized):
                anchor = float(basis.freqs[min(basis.localized)])
            else:
                anchor = float(basis.freqs[-1])
            period = 2.0 * math.pi / anchor
            steps = int(math.ceil(float(block["periods"]) * period / dt))
        else:
            raise ConfigError("classical block needs 'steps' or 'periods'")
        overrides = {
            _resolve_mode(key, basis): float(val)
            for key, val in (block.get("mode_overrides") or {}).items()
        }
        sim = SimConfig(
            dt=dt,
            steps=steps,
            record_every=int(block.get("record_every", 1)),
            hbar=float(block.get("hbar", 1.9e-5)),
            temperature=float(block.get("temperature", 0.0)),
            rng_seed=self.cfg.rng_seed,
            mode_overrides=overrides,
            sample_occupations=bool(block.get("sample_occupations", False)),
        )
        excitation = block.get("excitation") or {"kind": "thermal"}
        kind = excitation.get("kind", "thermal")
        if kind == "kick":
            mode = _resolve_mode(excitation.get("mode", "high"), basis)
            state = phonon_kick(basis, eq, mode,
                                float(excitation.get("phonons", 1.0)),
                                hbar=sim.hbar)
        elif kind == "thermal":
            state = thermal_state(basis, eq, sim)
        else:
            raise ConfigError(f"unknown excitation kind: {kind!r}")

        traj = integrate(self.cfg.model, state, sim)
        tracked = list(basis.localized)
        series = {j: mode_series(traj, basis, eq, j) for j in tracked}

        header = ["time", "total_energy"]
        for j in tracked:
            header += [f"theta_{basis.mode_number(j)}",
                       f"thetadot_{basis.mode_number(j)}"]
        rows = []
        for r in range(len(traj.times)):
            row = [_fmt(traj.times[r]), _fmt(traj.total_energy[r])]
            for j in tracked:
                row += [_fmt(series[j].theta[r]), _fmt(series[j].theta_dot[r])]
            rows.append(tuple(row))
        _write_csv(self.out / "trajectory.csv", tuple(header), rows)

        outputs = ["trajectory.csv", "classical.json"]
        if tracked:
            n_rec = len(traj.times)
            usable = n_rec if n_rec % 2 == 0 else n_rec - 1
            window = usable * sim.dt * sim.record_every
            spectra = {j: dft(series[j].theta[:usable], window) for j in tracked}
            first = spectra[tracked[0]]
            header = ["omega"] + [f"mag_{basis.mode_number(j)}" for j in tracked]
            rows = [
                tuple([_fmt(first.freqs[r])]
                      + [_fmt(spectra[j].magnitudes[r]) for j in tracked])
                for r in range(len(first.freqs))
            ]
            _write_csv(self.out / "spectra.csv", tuple(header), rows)
            outputs.append("spectra.csv")

        _dump_json(self.out / "classical.json", {
            "dt": sim.dt,
            "steps": sim.steps,
            "record_every": sim.record_every,
            "hbar": sim.hbar,
            "temperature": sim.temperature,
            "excitation": excitation,
            "mode_overrides": {str(k + 1): v for k, v in overrides.items()},
            "tracked_modes": [basis.mode_number(j) for j in tracked],
            "energy_drift": energy_drift(traj),
        })
        return outputs

    def _stage_quantum(self) -> list:
        block = self.cfg.quantum
        if block is None:
            raise ConfigError("quantum stage requires a 'quantum' config block")
        basis = load_basis(self.out / "modes.npz")
        tensors = CouplingTensors.load(self.out / "couplings.npz")

        requested = block.get("sys_modes", "localized")
        if requested == "localized":
            hi, lo = basis.localized_high_low()
            two_modes = (hi, lo)
        else:
            if not isinstance(requested, (list, tuple)) or len(requested) != 2:
                raise ConfigError(
                    "quantum.sys_modes must be 'localized' or two mode numbers")
            two_modes = tuple(_resolve_mode(m, basis) for m in requested)
        dims = int(block.get("dims", 7))
        hbar = float(block.get("hbar", 1.9e-5))
        temperature = float(block.get("temperature", 0.0))
        variants = list(block.get("variants", [FULL_TWO_MODE]))
        tau_c = float(block.get("tau_c", 15.0))
        rabi_periods = float(block.get("rabi_periods", 25.0))

        omega = np.sqrt(tensors.omega2)
        dt = block.get("dt")
        dt = float(dt) if dt is not None else math.pi / (10.0 * float(omega.max()))

        outputs = []
        meta = {
            "dims": dims,
            "hbar": hbar,
            "temperature": temperature,
            "dt": dt,
            "rabi_periods": rabi_periods,
            "sys_mode_numbers": [int(m) + 1 for m in two_modes],
            "variants": {},
        }
        for variant in variants:
            if variant == LOW_MODE_IN_BATH:
                sdef = SystemDef(sys_modes=two_modes[:1], dims=dims, hbar=hbar,
                                 temperature=temperature, variant=variant)
            elif variant == TRUNCATED_KERNEL:
                sdef = SystemDef(sys_modes=two_modes, dims=dims, hbar=hbar,
                                 temperature=temperature, variant=variant,
                                 tau_c=tau_c)
            elif variant == FULL_TWO_MODE:
                sdef = SystemDef(sys_modes=two_modes, dims=dims, hbar=hbar,
                                 temperature=temperature, variant=variant)
            else:
                raise ConfigError(f"unknown variant: {variant!r}")

            renorm = renormalize(tensors, sdef)
            omega1 = float(renorm.shifted_freqs[0])
            duration = rabi_periods * 2.0 * math.pi / omega1
            steps = int(math.ceil(duration / dt))
            record_every = int(block.get("record_every",
                                         max(1, steps // 400)))
            if variant == variants[0] or sdef.n_sys == 2:
                _dump_json(self.out / "renorm.json", {
                    "sys_mode_numbers": [int(m) + 1 for m in sdef.sys_modes],
                    **renorm.to_json_dict(),
                })
                if "renorm.json" not in outputs:
                    outputs.append("renorm.json")

            h_s = build_system_hamiltonian(tensors, sdef, renorm)
            ops = build_fock_operators(sdef)
            rho0 = default_initial_state(sdef)
            result = evolve(sdef, h_s, ops, tensors, rho0, dt, steps,
                            record_every=record_every)

            rows = []
            for r, t in enumerate(result.times):
                reduced = reduce_mode(result.rhos[r], sdef, h_s, float(t))
                ref = rabi_reference(omega1, dims, float(t))
                rows.append((_fmt(t), _fmt(fidelity(reduced, ref))))
            csv_name = f"fidelity_{variant}.csv"
            _write_csv(self.out / csv_name, ("time", "fidelity"), rows)
            outputs.append(csv_name)

            meta["variants"][variant] = {
                "csv": csv_name,
                "steps": steps,
                "record_every": record_every,
                "sys_mode_numbers": [int(m) + 1 for m in sdef.sys_modes],
                "omega_bare": renorm.bare_freqs,
                "omega_shifted": renorm.shifted_freqs,
                "rabi_period": 2.0 * math.pi / omega1,
                "trace_error": result.trace_error,
                "herm_error": result.herm_error,
            }
        _dump_json(self.out / "quantum.json", meta)
        outputs.append("quantum.json")
        return outputs


def run(config_path, force: bool = False, stage: str | None = None,
        output_dir: str | None = None, seed_override: int | None = None,
        log=None) -> dict:
    """Load a config file and execute its stages; return stage statuses."""
    cfg = RunConfig.from_json(config_path)
    if output_dir is not None:
        cfg.output_dir = str(output_dir)
    if seed_override is not None:
        cfg.rng_seed = int(seed_override)
    return Pipeline(cfg, force=force, log=log).run(only=stage)


def _fidelity_milestones(path: Path) -> dict:
    times, values = [], []
    lines = path.read_text().strip().splitlines()
    for line in lines[1:]:
        t_str, f_str = line.split(",")
        times.append(float(t_str))
        values.append(float(f_str))
    out = {"final_time": times[-1] if times else None,
           "final_fidelity": values[-1] if values else None}
    for bar in (0.99, 0.9):
        crossed = next((t for t, f in zip(times, values) if f < bar), None)
        out[f"below_{bar}"] = crossed
    return out


def report(artifact_dir) -> str:
    """Human-readable summary of a run directory's artifacts."""
    out = Path(artifact_dir)
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError(f"no manifest.json in {out}")
    manifest = _load_json(manifest_path)
    if "stages" not in manifest or "config" not in manifest:
        raise ConfigError(f"manifest in {out} is missing required fields")

    lines = [f"run directory: {out}"]
    versions = manifest.get("versions", {})
    lines.append("versions: " + ", ".join(
        f"{k} {v}" for k, v in sorted(versions.items())))

    warnings_found = []
    for stage, entry in manifest["stages"].items():
        status = entry.get("status", "?")
        wall = entry.get("wall_time_s")
        wall_txt = f" ({wall:.2f} s)" if isinstance(wall, (int, float)) else ""
        lines.append(f"stage {stage}: {status}{wall_txt}")
        if status == "failed":
            lines.append(f"  error: {entry.get('error')}")
        for name, digest in (entry.get("outputs") or {}).items():
            path = out / name
            if not path.exists():
                warnings_found.append(f"missing artifact: {name}")
            elif _sha256_file(path) != digest:
                warnings_found.append(
                    f"integrity warning: {name} does not match its manifest hash")
    for msg in warnings_found:
        lines.append(msg)

    modes_path = out / "modes.json"
    if modes_path.exists():
        summary = _load_json(modes_path)
        band = summary.get("band", {})
        lines.append(
            f"spectrum: {summary.get('n_modes')} modes, band "
            f"[{band.get('bottom')}, {band.get('top')}], "
            f"median spacing {band.get('median_spacing')}")
        for rank, entry in enumerate(summary.get("localized", []), start=1):
            lines.append(
                f"  localized omega_{rank} = {entry['frequency']:.6g} "
                f"(mode {entry['mode']}, participation "
                f"{entry['participation']:.3g}, gap {entry.get('gap_to_band')})")
        resos = (summary.get("resonances") or {}).get("entries", [])
        if resos:
            lines.append("resonances (smallest detunings):")
            for entry in resos[:5]:
                lines.append(
                    f"  {entry['signature']}: detuning {entry['detuning']:.4g}")

    coup_path = out / "couplings.json"
    if coup_path.exists():
        summary = _load_json(coup_path)
        lines.append(
            f"couplings: {summary['n_third']} cubic, "
            f"{summary['n_fourth']} quartic stored entries")
        for entry in summary.get("strongest_third", [])[:3]:
            modes_txt = ",".join(str(m) for m in entry["modes"])
            lines.append(
                f"  L[{modes_txt}] = {entry['value']:.6g}"
                f" (strength {entry['strength']:.4g})")
        for entry in summary.get("strongest_fourth", [])[:3]:
            modes_txt = ",".join(str(m) for m in entry["modes"])
            lines.append(
                f"  M[{modes_txt}] = {entry['value']:.6g}"
                f" (strength {entry['strength']:.4g})")

    classical_path = out / "classical.json"
    if classical_path.exists():
        summary = _load_json(classical_path)
        lines.append(
            f"classical: {summary['steps']} steps at dt = {summary['dt']:.6g}, "
            f"energy drift {summary['energy_drift']:.3e}")

    renorm_path = out / "renorm.json"
    if renorm_path.exists():
        summary = _load_json(renorm_path)
        bare = summary.get("bare_freqs", [])
        shifted = summary.get("shifted_freqs", [])
        for rank, (b, s) in enumerate(zip(bare, shifted), start=1):
            lines.append(
                f"renormalization: omega_{rank} = {b:.6g} -> {s:.6g} "
                f"({abs(s - b) / b:.3%} shift)")

    for csv_path in sorted(out.glob("fidelity_*.csv")):
        marks = _fidelity_milestones(csv_path)
        variant = csv_path.stem.replace("fidelity_", "")
        below99 = marks["below_0.99"]
        below90 = marks["below_0.9"]
        lines.append(
            f"fidelity [{variant}]: F(t={marks['final_time']:.4g}) = "
            f"{marks['final_fidelity']:.6g}; "
            f"first F<0.99 at {'never' if below99 is None else format(below99, '.6g')}, "
            f"first F<0.9 at {'never' if below90 is None else format(below90, '.6g')}")

    return "\n".join(lines)
