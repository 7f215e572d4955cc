import logging
import math
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .analysis import FIT_COLUMNS, FitModel, FitResult, fit_scaling, run_sweep
from .chain import (Direction, axial_hessian, global_anharmonicity_traps, normal_modes, solve_equilibrium,
                    transversal_hessian)
from .config import Configuration, load_config, validate_config
from .couplings import CouplingReport, compute_report
from .errors import ConfigurationError
from .oracle import run_oracle
from .report import TWO_PI, frequency_columns

logger = logging.getLogger(__name__)

ConfigSource = Union[str, Mapping[str, Any], Configuration]


def _ion(index: int) -> int:
    return index + 1


class MagicCouplingStudio:
    def __init__(self, config: ConfigSource, gradient: Optional[float] = None):
        """
        Load and validate a configuration.

        Args:
            config: path to a JSON file, a raw key-value mapping, or a Configuration.
            gradient: optional dB/dz in T/m replacing the configured one.
        """
        if isinstance(config, Configuration):
            cfg = config
        elif isinstance(config, str):
            cfg = load_config(config)
        else:
            cfg = validate_config(config)
        if gradient is not None:
            cfg = cfg.with_overrides(db_dz=gradient)
        self.cfg = cfg
        self._report: Optional[CouplingReport] = None

    def _payload(self, subcommand: str, tables: Dict[str, List[Dict[str, Any]]], document: Dict[str, Any],
                 plot: Optional[Dict[str, Any]] = None, label: Optional[str] = None) -> Dict[str, Any]:
        return {
            "subcommand": subcommand,
            "n_ions": self.cfg.n_ions,
            "gradient": self.cfg.db_dz,
            "label": label,
            "tables": tables,
            "document": document,
            "plot": plot,
        }

    def _couplings(self) -> CouplingReport:
        if self._report is None:
            self._report = compute_report(self.cfg)
        return self._report

    def equilibrium(self) -> Dict[str, Any]:
        """
        Equilibrium positions of the configured chain.

        Returns:
            Dict[str, Any]: one row per ion with dimensionless and physical positions.
        """
        chain = solve_equilibrium(self.cfg.n_ions, length_scale=self.cfg.length_scale)
        rows = [{"ion": _ion(i), "u": float(u), "z0_m": float(z)} for i, (u, z) in enumerate(zip(chain.u, chain.z0))]
        document = {
            "length_scale_m": chain.l,
            "iterations": chain.iterations,
            "residual": chain.residual,
            "u": chain.u,
        }
        return self._payload("equilibrium", {"main": rows}, document)

    def modes(self, direction: str = "axial") -> Dict[str, Any]:
        """
        Normal modes along one direction (``axial``, ``x`` or ``y``).

        Returns:
            Dict[str, Any]: one row per mode with frequency, width and participation vector.
        """
        direction = Direction(direction)
        chain = solve_equilibrium(self.cfg.n_ions, length_scale=self.cfg.length_scale)
        if direction is Direction.AXIAL:
            hessian = axial_hessian(chain, self.cfg)
        else:
            hessian = transversal_hessian(chain, self.cfg, direction)
        modes = normal_modes(hessian, self.cfg, direction)
        rows = []
        for l in range(modes.n_modes):
            row = {"mode": l + 1, **frequency_columns("nu", modes.nu[l]), "dz_m": float(modes.dz[l])}
            row.update({f"S_ion{_ion(n)}": float(modes.S[n, l]) for n in range(self.cfg.n_ions)})
            rows.append(row)
        document = {"direction": direction.value, "nu_rad_s": modes.nu, "dz_m": modes.dz, "S": modes.S}
        return self._payload(f"modes_{direction.value}", {"main": rows}, document)

    def couplings(self) -> Dict[str, Any]:
        """
        Two-body spin-spin couplings and the spin-phonon magnitude bounds.

        Returns:
            Dict[str, Any]: one row per ion pair i < j.
        """
        report = self._couplings()
        n = self.cfg.n_ions
        rows = [
            {"ion_i": _ion(i), "ion_j": _ion(j), **frequency_columns("J", report.J2[i, j])}
            for i in range(n) for j in range(i + 1, n)
        ]
        document = {
            "J2_hz": report.J2 / TWO_PI,
            "lamb_dicke": report.eps.eps,
            "mode_frequencies_hz": report.modes.nu / TWO_PI,
            "spin_phonon_2body_max_hz": report.spin_phonon_2body_max / TWO_PI,
            "spin_phonon_pair_max_hz": report.spin_phonon_pair_max / TWO_PI,
            "resonance_gap_hz": report.resonance_gap / TWO_PI,
            "hopping_gap_hz": report.hopping_gap / TWO_PI if math.isfinite(report.hopping_gap) else None,
        }
        return self._payload("couplings", {"main": rows}, document)

    def three_body(self) -> Dict[str, Any]:
        """
        Three-spin couplings from Coulomb and trap anharmonicities, per triple i < j < k.
        """
        report = self._couplings()
        rows = []
        for triple, value in report.J3_coulomb.items():
            row = {"ion_i": _ion(triple[0]), "ion_j": _ion(triple[1]), "ion_k": _ion(triple[2])}
            row.update(frequency_columns("J3_coulomb", value))
            row.update(frequency_columns("J3_trap", report.J3_trap[triple]))
            rows.append(row)
        document: Dict[str, Any] = {
            "J3_coulomb_max_hz": max((abs(v) for v in report.J3_coulomb.values()), default=0.0) / TWO_PI,
            "J3_trap_max_hz": max((abs(v) for v in report.J3_trap.values()), default=0.0) / TWO_PI,
            "J3_trap_estimate_hz": report.J3_trap_estimate / TWO_PI,
        }
        if report.trap_hierarchy is not None:
            alpha = float(np.max(np.abs(self.cfg.alpha_n)))
            check = global_anharmonicity_traps(self.cfg.n_ions, self.cfg, alpha)
            document["stability_hierarchy"] = vars(report.trap_hierarchy)
            document["anharmonic_trap"] = vars(check)
        return self._payload("three-body", {"main": rows}, document)

    def local_fields(self) -> Dict[str, Any]:
        """
        Phonon-dependent local fields per ion for the configured occupations.
        """
        report = self._couplings()
        rows = []
        for n in range(self.cfg.n_ions):
            row = {"ion": _ion(n)}
            row.update(frequency_columns("local_field", report.local_field[n]))
            row.update(frequency_columns("coincident_field", report.coincident_field[n]))
            row.update(frequency_columns("curvature_field", report.curvature_local_field[n]))
            rows.append(row)
        document = {
            "local_field_hz": report.local_field / TWO_PI,
            "phonon_occupations": list(self.cfg.phonon_occupations),
        }
        plot = {
            "x": [_ion(n) for n in range(self.cfg.n_ions)],
            "series": {"local field": np.abs(report.local_field) / TWO_PI},
            "xlabel": "ion",
            "ylabel": "|local field| / 2pi (Hz)",
            "loglog": False,
        }
        return self._payload("local-fields", {"main": rows}, document, plot)

    def curvature(self) -> Dict[str, Any]:
        """
        Curvature-induced three-body terms, both the per-centre and the symmetrised form.
        """
        report = self._couplings()
        rows = [
            {"ion_n": _ion(c), "ion_i": _ion(i), "ion_j": _ion(j), **frequency_columns("J_nij", value)}
            for (c, i, j), value in report.J3_curvature.items()
        ]
        symmetrized = [
            {"ion_i": _ion(i), "ion_j": _ion(j), "ion_k": _ion(k), **frequency_columns("J_sym", value),
             **frequency_columns("zzz_coefficient", -0.5 * value)}
            for (i, j, k), value in report.J3_curvature_symmetrized.items()
        ]
        res = report.resonance
        document = {
            "gamma_s": [float(g) if defined else None for g, defined in zip(res.gamma_n, res.gamma_defined)],
            "d2omega_rad_s_m2": res.d2omega_n,
            "curvature_estimate_hz": report.curvature_estimate / TWO_PI,
            "J_sym_max_hz": max((abs(v) for v in report.J3_curvature_symmetrized.values()), default=0.0) / TWO_PI,
        }
        return self._payload("curvature", {"main": rows, "symmetrized": symmetrized}, document)

    def transversal(self) -> Dict[str, Any]:
        """
        Local-field corrections and mode couplings from the transversal modes.

        Raises:
            ConfigurationError: if ``omega_radial`` is not configured.
        """
        if self.cfg.omega_radial is None:
            raise ConfigurationError("omega_radial", "transversal analysis requires omega_radial")
        report = self._couplings()
        rows = []
        for n in range(self.cfg.n_ions):
            row = {"ion": _ion(n)}
            row.update(frequency_columns("transversal_field", report.transversal_local_field[n]))
            row.update(frequency_columns("axial_field", report.local_field[n]))
            rows.append(row)
        document = {
            "omega_radial_rad_s": list(self.cfg.omega_radial),
            "transversal_local_field_hz": report.transversal_local_field / TWO_PI,
            "mode_coupling_max_hz": report.transversal_mode_coupling_max / TWO_PI,
        }
        return self._payload("transversal", {"main": rows}, document)

    def _range(self, n_range: Optional[Tuple[int, int]]) -> Tuple[int, int]:
        return tuple(n_range) if n_range is not None else self.cfg.n_range

    def sweep(self, n_range: Optional[Tuple[int, int]] = None) -> Dict[str, Any]:
        """
        Sweep the chain length and tabulate the largest and smallest couplings.

        Returns:
            Dict[str, Any]: one row per N, frequencies in rad/s and Hz.
        """
        low, high = self._range(n_range)
        rows = run_sweep(self.cfg, (low, high))
        table = [_sweep_table_row(row) for row in rows]
        plot = {
            "x": [row.n_ions for row in rows],
            "series": {
                "J_max": [row.j2_max / TWO_PI for row in rows],
                "J_min": [row.j2_min / TWO_PI for row in rows],
            },
            "xlabel": "N",
            "ylabel": "J / 2pi (Hz)",
        }
        return self._payload("sweep", {"main": table}, {"rows": table}, plot, label=f"{low}-{high}")

    def fit(self, column: str = "j2_max", model: str = "power_law",
            n_range: Optional[Tuple[int, int]] = None, space: Optional[str] = None) -> Dict[str, Any]:
        """
        Sweep, then fit ``column`` with a power law or a log-corrected power law.

        ``space`` (``linear`` or ``log``) overrides the model's default fit space.
        """
        if column not in FIT_COLUMNS:
            raise ConfigurationError("column", f"column must be one of {', '.join(FIT_COLUMNS)}")
        low, high = self._range(n_range)
        rows = run_sweep(self.cfg, (low, high))
        result = fit_scaling(rows, column, FitModel(model), space)
        n = [row.n_ions for row in rows]
        values = [getattr(row, column) for row in rows]
        fitted = result.predict(n)
        table = [
            {"N": size, f"{column}_hz": value / TWO_PI, "fit_hz": float(f) / TWO_PI}
            for size, value, f in zip(n, values, fitted)
        ]
        plot = {
            "x": n,
            "series": {column: [v / TWO_PI for v in values]},
            "fits": [{"label": _fit_label(result), "x": n, "y": list(fitted / TWO_PI)}],
            "xlabel": "N",
            "ylabel": f"{column} / 2pi (Hz)",
        }
        return self._payload("fit", {"main": table}, {"fit": _fit_document(result)}, plot,
                             label=f"{column}_{low}-{high}")

    def oracle(self, n_ions: int = 2, cutoff: Optional[int] = None, order: Optional[int] = None) -> Dict[str, Any]:
        """
        Compare the polaron-frame coefficients of a small chain with the analytic ones.
        """
        cutoff = cutoff if cutoff is not None else self.cfg.oracle_cutoff
        order = order if order is not None else self.cfg.oracle_order
        result = run_oracle(self.cfg, n_ions, cutoff, order)
        rows = []
        for label, analytic in result.analytic.items():
            extracted = result.extracted[label]
            deviation = abs(extracted - analytic) / abs(analytic) if analytic != 0 else abs(extracted)
            rows.append({"operator": label, "extracted_rad_s": extracted, "analytic_rad_s": analytic,
                         "relative_deviation": deviation})
        document = {
            "extracted_rad_s": result.extracted,
            "analytic_rad_s": result.analytic,
            "truncation_error_estimate": result.truncation_error_estimate,
            "leakage": result.leakage,
            "leakage_flagged": result.leakage_flagged,
            "unitarity_error": result.unitarity_error,
            "cutoff": result.cutoff,
            "order": result.order,
            "sector": list(result.sector),
        }
        payload = self._payload("oracle", {"main": rows}, document, label=str(n_ions))
        payload["n_ions"] = n_ions
        return payload

    def report(self, n_range: Optional[Tuple[int, int]] = None) -> Dict[str, Any]:
        """
        Couplings, local-field profile, sweep and the three scaling fits in one payload.
        """
        low, high = self._range(n_range)
        couplings = self.couplings()
        fields = self.local_fields()
        rows = run_sweep(self.cfg, (low, high))
        fits = {}
        for column, model in (("j2_max", FitModel.POWER_LAW), ("j2_min", FitModel.POWER_LAW),
                              ("local_field_edge", FitModel.LOG_CORRECTED)):
            fits[column] = fit_scaling(rows, column, model)
        table = [_sweep_table_row(row) for row in rows]
        n = [row.n_ions for row in rows]
        plot = {
            "x": n,
            "series": {"J_max": [r.j2_max / TWO_PI for r in rows], "J_min": [r.j2_min / TWO_PI for r in rows]},
            "fits": [{"label": _fit_label(fits[c]), "x": n, "y": list(fits[c].predict(n) / TWO_PI)}
                     for c in ("j2_max", "j2_min")],
            "xlabel": "N",
            "ylabel": "J / 2pi (Hz)",
        }
        document = {
            "couplings": couplings["document"],
            "local_fields": fields["document"],
            "fits": {column: _fit_document(result) for column, result in fits.items()},
        }
        tables = {
            "couplings": couplings["tables"]["main"],
            "local_fields": fields["tables"]["main"],
            "sweep": table,
        }
        return self._payload("report", tables, document, plot)


def _sweep_table_row(row) -> Dict[str, Any]:
    table_row: Dict[str, Any] = {"N": row.n_ions}
    table_row.update(frequency_columns("j2_max", row.j2_max))
    table_row.update(frequency_columns("j2_min", row.j2_min))
    table_row.update(frequency_columns("local_field_edge", row.local_field_edge))
    table_row.update(frequency_columns("resonance_gap", row.resonance_gap))
    return table_row


def _fit_document(result: FitResult) -> Dict[str, Any]:
    names = ("c", "a", "b")[:len(result.params)]
    return {
        "model": result.model.value,
        "space": result.space.value,
        "column": result.column,
        "params": dict(zip(names, result.params)),
        "uncertainties": dict(zip(names, result.param_uncertainties)),
        "residual": result.residual,
        "n_points": result.n_points,
    }


def _fit_label(result: FitResult) -> str:
    if result.b is None:
        return f"N^{result.a:.2f}"
    return f"N^{result.a:.2f} log({result.b:.2f} N)"
