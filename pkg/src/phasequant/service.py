"""
Quantization service for phasequant.
Turns a RunConfig into report payloads shared by the CLI and the HTTP API.
"""
import logging
import math
from typing import Any, Dict, List, Optional, Tuple

from .config import get_settings
from .cornell import (
    CornellParams,
    cornell_quantize_numeric,
    cornell_spectrum_closed_form,
    identity_sweep,
    regge_table,
)
from .errors import ConfigurationError
from .models import (
    CornellConfig,
    ErrorInfo,
    IdentitySweepReport,
    RunConfig,
    SpectrumReport,
)
from .oracle import (
    DEFAULT_STEP,
    GridSpec,
    auto_grid,
    compare_report,
    cornell_equation,
    oracle_spectrum,
    schrodinger_equation,
)
from .problem import Potential, QuantProblem
from .quantizer import quantize_2tp, spectrum
from .wavefunction import (
    build_classical_wf,
    constraint_diagnostic,
    node_positions,
    sample_wf,
    standing_wave,
    standing_wave_norm,
)

logger = logging.getLogger(__name__)


class QuantizationService:
    """Runs quantization commands and shapes their results for output."""

    def _workers(self, config: RunConfig) -> int:
        return config.workers or get_settings().workers

    def _cornell_params(self, config: RunConfig, l: Optional[int] = None) -> CornellParams:
        cornell = config.cornell or CornellConfig()
        return CornellParams(
            m=cornell.mass,
            alpha_tilde=cornell.resolved_alpha_tilde(),
            kappa=cornell.kappa,
            l=cornell.l if l is None else l,
        )

    def health_check(self) -> Dict[str, Any]:
        """
        Quantize the harmonic ground state as a smoke test.
        Returns status and the computed energy.
        """
        try:
            entry = quantize_2tp(QuantProblem(potential=Potential.harmonic(1.0)), 0)
            ok = abs(entry.energy - 0.5) <= 1e-8
            return {
                "status": "ok" if ok else "degraded",
                "ground_state": entry.energy,
                "message": "Harmonic ground state reproduced" if ok else "Harmonic ground state is off",
            }
        except Exception as e:
            return {"status": "error", "ground_state": None, "message": f"Self-check failed: {str(e)}"}

    def spectrum(self, config: RunConfig) -> SpectrumReport:
        problem = config.build_problem(get_settings())
        result = spectrum(problem, config.n_max, workers=self._workers(config))
        return SpectrumReport(
            levels=result.levels,
            error=ErrorInfo(**result.error) if result.error else None,
        )

    def wavefunction(self, config: RunConfig) -> Tuple[Dict[str, Any], List[Tuple[float, float, str]]]:
        """Level n with its piecewise wavefunction diagnostics and sample rows."""
        problem = config.build_problem(get_settings())
        entry = quantize_2tp(problem, config.n)
        wf = build_classical_wf(problem, entry)
        nodes = node_positions(wf)
        k_n = math.sqrt(2.0 * problem.mass * entry.energy) / problem.hbar if entry.energy > 0 else None
        standing = None
        if k_n:
            wave = standing_wave(entry.n, k_n)
            standing = {"k_n": k_n, "C_n": wave.C_n, **standing_wave_norm(wave).model_dump()}
        rows = sample_wf(wf, config.samples)
        payload = {
            "level": entry.model_dump(),
            "turning_points": [wf.x1, wf.x2],
            "phi1": wf.phi1,
            "phi2": wf.phi2,
            "amplitude": wf.amplitude,
            "node_count": len(nodes),
            "node_positions": nodes,
            "constraint_diagnostic": constraint_diagnostic(problem, entry.energy),
            "standing_wave": standing,
            "samples": [list(row) for row in rows],
        }
        return payload, rows

    def cornell_table(self, config: RunConfig) -> Dict[str, Any]:
        """Closed-form and numerically quantized levels plus the Regge grid."""
        cornell = config.cornell or CornellConfig()
        params = self._cornell_params(config)
        levels = []
        for n_r in range(cornell.n_r_max + 1):
            closed = cornell_spectrum_closed_form(params, n_r)
            numeric = cornell_quantize_numeric(params, n_r)
            levels.append({
                "n_r": n_r,
                "E_squared": closed.E_squared,
                "E": closed.E,
                "E_squared_numeric": numeric.E_squared,
                "rel_deviation": abs(numeric.E_squared - closed.E_squared) / closed.E_squared,
            })
        rows = regge_table(params, cornell.n_r_max, cornell.l_max, cornell.shift_c)
        return {
            "params": params.model_dump(),
            "Lambda": params.Lambda,
            "levels": levels,
            "regge": [row.model_dump() for row in rows],
        }

    def identity_check(self, config: RunConfig) -> IdentitySweepReport:
        samples = identity_sweep(config.sweeps, config.seed, workers=self._workers(config))
        return IdentitySweepReport(
            samples=[s.model_dump() for s in samples],
            max_residual=max(s.residual for s in samples),
            max_scaled_residual=max(s.residual / s.tolerance for s in samples),
            passed=all(s.residual <= s.tolerance for s in samples),
        )

    def verify(self, config: RunConfig) -> Dict[str, Any]:
        """Semiclassical levels against the Numerov oracle for one problem."""
        workers = self._workers(config)
        if config.problem == "cornell":
            return self._verify_cornell(config, workers)

        if config.problem == "harmonic":
            problem = QuantProblem(potential=Potential.harmonic(1.0), window=config.window)
        elif config.problem == "coulomb":
            problem = QuantProblem(potential=Potential.coulomb(1.0), angular=config.l or 0, window=config.window)
        elif config.potential is not None:
            problem = config.build_problem(get_settings())
        else:
            raise ConfigurationError("verify needs --problem or a potential")

        semiclassical = spectrum(problem, config.n_max, workers=workers)
        if semiclassical.error:
            return {"problem": problem.potential.describe(), "error": semiclassical.error}
        equation = schrodinger_equation(problem, true_centrifugal=True)
        grid = auto_grid(equation, semiclassical.levels[-1].energy, h=config.grid_h or DEFAULT_STEP)
        oracle = oracle_spectrum(equation, grid, config.n_max, workers=workers)
        return self._comparison(problem.potential.describe(), grid, semiclassical.levels, oracle)

    def _verify_cornell(self, config: RunConfig, workers: int) -> Dict[str, Any]:
        cornell = config.cornell or CornellConfig()
        reports = []
        for l in range(cornell.l_max + 1):
            params = self._cornell_params(config, l)
            closed = [cornell_spectrum_closed_form(params, n_r) for n_r in range(config.n_max + 1)]
            equation = cornell_equation(params)
            grid = auto_grid(equation, closed[-1].E_squared, h=config.grid_h or DEFAULT_STEP)
            oracle = oracle_spectrum(equation, grid, config.n_max, workers=workers)
            reports.append({"l": l, **self._comparison(equation.name, grid, closed, oracle)})
        return {"problem": "cornell", "reports": reports}

    def _comparison(self, name: str, grid: GridSpec, semiclassical, oracle) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "problem": name,
            "grid": grid.model_dump(),
            "semiclassical": [level.model_dump() for level in semiclassical],
            "oracle": [level.model_dump() for level in oracle.levels],
        }
        if oracle.error:
            payload["error"] = oracle.error
            return payload
        payload["comparison"] = compare_report(semiclassical, oracle.levels).model_dump()
        return payload


# Global service instance
quant_service = QuantizationService()
