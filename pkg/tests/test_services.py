import pytest

from muskat.cli import parse_config
from muskat.config.settings import VerifySettings
from muskat.diagnostics import STATUS_FAIL, STATUS_NOT_APPLICABLE, DiagnosticsRecord
from muskat.exceptions import OutputError, VariationalError
from muskat.infrastructure.parallel import BoundedExecutor
from muskat.services import DiagnoseService, SimulationService, VerificationService
from muskat.services.diagnose_service import check_singularity_bound
from muskat.services.simulation_service import default_output_dir
from muskat.services.verification_service import (_run_item, check_arctan_identity,
                                                  check_G_primitives, check_log_kernel_tail,
                                                  check_zero_identity)


def rec(t):
    return DiagnosticsRecord(t=t, max_slope=0.2, l1_mass=0.04, l2_energy=0.003,
                             lambda_dissipation=0.01, ln_dissipation=None, min_height=0.0,
                             holder_fxx=1.0, blowup_accumulator=0.0)


def test_default_output_dir(constant_config_text):
    cfg = parse_config(constant_config_text, environ={})
    assert default_output_dir(cfg).replace("\\", "/") == "runs/constant-N32"


def test_simulation_summary_and_checks(tmp_path, constant_config_text):
    cfg = parse_config(constant_config_text, environ={})
    outcome = SimulationService().simulate(cfg, str(tmp_path / "run"))
    assert outcome.summary["termination"] == "completed"
    assert outcome.summary["max_slope_monotone"] is True
    assert outcome.summary["mass_drift"] <= 1e-12
    assert outcome.summary["sup_norm_initial"] == 0.5
    assert outcome.summary["sup_norm_final"] == pytest.approx(0.5, abs=1e-12)
    assert outcome.summary["diagnostics_settings"]["mass_tol"] == cfg.diagnostics.mass_tol
    assert [c.check for c in outcome.checks] == ["monotone_max_slope", "mass_conservation"]


def test_diagnose_requires_csv(tmp_path):
    with pytest.raises(OutputError):
        DiagnoseService().diagnose(str(tmp_path))


def test_singularity_bound_check():
    assert check_singularity_bound(None, [rec(0.0)], "completed").status == STATUS_NOT_APPLICABLE
    assert check_singularity_bound(10.0, [rec(0.0), rec(2.0)], "BlowupSuspected").passed
    assert check_singularity_bound(1.0, [rec(0.0), rec(2.0)], "completed").status == STATUS_FAIL


def test_kernel_checks_pass():
    assert check_G_primitives(0.3).passed
    assert check_arctan_identity().passed
    assert check_log_kernel_tail().passed


def test_zero_identity_report():
    [report] = check_zero_identity(0.2)
    assert report.passed


def test_failing_item_becomes_report():
    def boom():
        raise VariationalError("no convergence")

    [report] = _run_item(("H_plus_minimizer[a=0.3]", boom))
    assert report.status == STATUS_FAIL
    assert "VariationalError" in report.detail["error"]


def test_build_items_follow_suite_selection():
    service = VerificationService()
    kernels = [name for name, _ in service.build_items(VerifySettings(suite="kernels", a_values=(0.3,)))]
    assert kernels[0] == "h_vanishes_on_ray"
    assert "G_primitive_derivatives[a=0.3]" in kernels
    assert not any(name.startswith("tent") for name in kernels)
    variational = [name for name, _ in service.build_items(VerifySettings(suite="variational",
                                                                          a_values=(0.1, 0.3)))]
    assert variational[:2] == ["g_structure[a=0.1]", "g_interval_inequality[a=0.1]"]
    assert "H_plus_minimizer[a=0.3]" in variational


def test_kernel_suite_is_independent_of_executor():
    settings = VerifySettings(suite="kernels", a_values=(0.2,), h_samples=500)
    serial = [r.to_dict() for r in VerificationService().run(settings)]
    with BoundedExecutor(max_workers=3) as pool:
        threaded = [r.to_dict() for r in VerificationService().run(settings, pool)]
    assert serial == threaded
    assert all(r["pass"] for r in serial)
