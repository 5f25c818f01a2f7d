import numpy as np
import pytest

from conebvp.errors import ParameterError
from conebvp.grid import GridFunction, build_mesh, sample
from conebvp.kernel import solve_linear
from conebvp.params import ProblemSpec
from conebvp.solver import (
    InitKind,
    Method,
    SolverOptions,
    Status,
    apply_A,
    compare_solutions,
    newton_solve,
    picard_solve,
    residuals,
    solve,
)

from conftest import POWER_PARAMS

UNIT = dict(T=1.0, eta=0.5, alpha=1.0, beta=0.0)


def _oracle(t):
    return 23 / 42 * t - t**2 / 2


def _kernel_bound(spec, mesh):
    """sup of the linear solution operator applied to 1 (its kernel is nonnegative)."""
    return solve_linear(GridFunction(mesh, np.ones(mesh.size)), spec).sup_norm()


def test_apply_A_zero_nonlinearity():
    spec = ProblemSpec(**UNIT, a_expr="1", f_expr="0")
    mesh = build_mesh(1.0, 0.5, 20, 20)
    u = GridFunction(mesh, np.linspace(0, 3, mesh.size))
    assert not apply_A(u, spec).values.any()


def test_apply_A_constant_nonlinearity():
    spec = ProblemSpec(**UNIT, a_expr="1", f_expr="1")
    mesh = build_mesh(1.0, 0.5, 50, 50)
    Au = apply_A(GridFunction(mesh, np.full(mesh.size, 5.0)), spec)
    np.testing.assert_allclose(Au.values, _oracle(mesh.nodes), atol=1e-12)


def test_apply_A_clamps_negative_nodes():
    spec = ProblemSpec(**UNIT, a_expr="1", f_expr="sqrt(u)")
    mesh = build_mesh(1.0, 0.5, 10, 10)
    u = GridFunction(mesh, np.linspace(-1, 1, mesh.size))
    Au = apply_A(u, spec)
    clamped = apply_A(GridFunction(mesh, np.maximum(u.values, 0)), spec)
    np.testing.assert_array_equal(Au.values, clamped.values)


def test_apply_A_region_guard():
    spec = ProblemSpec(1.0, 0.5, 1.0, 1.4, "1", "u")
    mesh = build_mesh(1.0, 0.5, 4, 4)
    with pytest.raises(ParameterError):
        apply_A(GridFunction(mesh, np.ones(9)), spec)


def test_residuals_of_constant_forcing_solution():
    spec = ProblemSpec(**UNIT, a_expr="1", f_expr="2")
    mesh = build_mesh(1.0, 0.5, 200, 200)
    u = solve_linear(sample(mesh, lambda s: 2.0), spec)
    r = residuals(u, spec)
    assert r.ode_sup <= 1e-8
    assert r.bc0 <= 1e-10 and r.bcT <= 1e-10
    assert r.fixed_point <= 1e-12


def test_residuals_of_trivial_solution():
    spec = ProblemSpec(**POWER_PARAMS, a_expr="t", f_expr="u^2")
    mesh = build_mesh(2.0, 1.5, 20, 20)
    r = residuals(GridFunction(mesh, np.zeros(mesh.size)), spec)
    assert (r.ode_sup, r.bc0, r.bcT, r.fixed_point) == (0.0, 0.0, 0.0, 0.0)


def test_residuals_detect_single_node_perturbation():
    spec = ProblemSpec(**UNIT, a_expr="1", f_expr="1")
    mesh = build_mesh(1.0, 0.5, 40, 40)
    u = solve_linear(sample(mesh, lambda s: 1.0), spec).values.copy()
    eps = 1e-6
    u[7] += eps
    r = residuals(GridFunction(mesh, u), spec)
    assert r.ode_sup >= eps / mesh.h1**2


def test_options_validation():
    for kwargs in (dict(m=3), dict(n=0), dict(tol=0), dict(max_iter=0), dict(damping=0), dict(damping=1.5),
                   dict(trivial_floor=-1), dict(m=4002)):
        with pytest.raises(ParameterError):
            SolverOptions(**kwargs)
    opts = SolverOptions(method="Picard", init="LinearSolveOfA", multistart=[1, 2])
    assert opts.method is Method.PICARD and opts.init is InitKind.LINEAR_SOLVE_OF_A
    assert opts.multistart == (1.0, 2.0)


def test_solvers_require_admissible():
    spec = ProblemSpec(1.0, 0.5, 9.0, 0.0, "1", "u")
    with pytest.raises(ParameterError):
        newton_solve(spec)
    with pytest.raises(ParameterError):
        picard_solve(spec, SolverOptions(method="Picard"))


def test_picard_constant_nonlinearity_two_iterations():
    spec = ProblemSpec(**UNIT, a_expr="1", f_expr="1")
    r = picard_solve(spec, SolverOptions(method="Picard"))
    assert r.converged and r.iterations == 2
    np.testing.assert_allclose(r.solution.values, _oracle(r.solution.nodes), atol=1e-12)


def test_picard_sublinear_power(power_sqrt):
    r = picard_solve(power_sqrt, SolverOptions(method="Picard", m=100, n=100))
    assert r.status is Status.CONVERGED
    u = r.solution
    assert np.all(u.values[1:-1] > 0)
    assert r.residuals.fixed_point <= 1e-6 * u.sup_norm()
    assert r.residuals.fixed_point <= 10 * 1e-10 * (1 + u.sup_norm())
    assert r.checks_passed


def test_picard_superlinear_outcome_is_reported(log_superlinear):
    r = picard_solve(log_superlinear, SolverOptions(method="Picard"))
    assert r.status in (Status.NOT_CONVERGED, Status.TRIVIAL_LIMIT)
    assert not r.converged
    assert r.notes


def test_picard_divergence_is_recorded(power_square):
    r = picard_solve(power_square, SolverOptions(method="Picard", init_value=1000.0))
    assert r.status is Status.NOT_CONVERGED
    assert any("diverged" in n or "no convergence" in n for n in r.notes)


def test_picard_max_iter_exhausted(power_sqrt):
    r = picard_solve(power_sqrt, SolverOptions(method="Picard", max_iter=3, m=20, n=20))
    assert r.status is Status.NOT_CONVERGED and r.iterations == 3


def test_picard_damping_and_linear_init(power_sqrt):
    r = picard_solve(power_sqrt, SolverOptions(method="Picard", damping=0.7, init="LinearSolveOfA",
                                              init_value=100.0, m=60, n=60))
    assert r.converged


def test_newton_linear_problem():
    spec = ProblemSpec(**UNIT, a_expr="1", f_expr="1")
    r = newton_solve(spec, SolverOptions(multistart=(1.0,)))
    assert r.converged and r.iterations <= 2
    np.testing.assert_allclose(r.solution.values, _oracle(r.solution.nodes), atol=1e-10)


def test_newton_superlinear_log(log_superlinear):
    r = newton_solve(log_superlinear)
    u = r.solution
    assert r.converged and u.sup_norm() >= 1e-6
    assert r.residuals.fixed_point <= 10 * 1e-10 * (1 + u.sup_norm())
    assert max(r.residuals.bc0, r.residuals.bcT) <= 1e-6 * (1 + u.sup_norm())
    assert r.checks_passed
    assert [c.name for c in r.checks] == ["positivity", "concavity", "cone_bound"]
    assert r.constants is not None


def test_newton_singular_nonlinearity(singular_sublinear):
    r = newton_solve(singular_sublinear, SolverOptions(multistart=(1.0,)))
    assert r.converged
    v = r.solution.values
    assert v[0] == pytest.approx(v[r.solution.mesh.m], rel=1e-12)
    assert v[0] > 0
    assert r.checks_passed


def test_newton_default_starts_miss_large_sublinear_solution(power_sqrt):
    r = newton_solve(power_sqrt, SolverOptions(m=100, n=100))
    assert r.status is Status.TRIVIAL_LIMIT
    wide = newton_solve(power_sqrt, SolverOptions(m=100, n=100, multistart=(0.1, 1, 10, 100)))
    assert wide.converged and wide.init_used == 100.0


def test_newton_reports_exhausted_starts(power_square):
    r = newton_solve(power_square, SolverOptions(max_iter=1, multistart=(50.0,)))
    assert r.status is Status.NOT_CONVERGED
    assert any("exhausted" in n for n in r.notes)
    assert r.trace and r.trace[0]["start"] == 50.0


def test_solve_dispatches(power_sqrt):
    r = solve(power_sqrt, SolverOptions(method="Picard", m=20, n=20))
    assert r.method is Method.PICARD


@pytest.mark.parametrize("fixture_name, panels", [("log_superlinear", (50, 100)), ("singular_sublinear", (50, 100)), ("power_square", (150, 50))])
def test_ode_residual_second_order_on_equal_steps(request, fixture_name, panels):
    spec = request.getfixturevalue(fixture_name)
    m, n = panels
    assert abs(spec.eta / m - (spec.T - spec.eta) / n) < 1e-14
    starts = (1.0, 0.1, 10.0)
    res = [newton_solve(spec, SolverOptions(m=k * m, n=k * n, multistart=starts)).residuals.ode_sup for k in (1, 2, 4)]
    ratios = np.array(res[:-1]) / np.array(res[1:])
    assert np.all((ratios >= 3) & (ratios <= 5)), ratios


def test_junction_residual_first_order_when_steps_differ(log_superlinear):
    # the nonuniform three-point formula is only first-order consistent at eta
    res = [newton_solve(log_superlinear, SolverOptions(m=k, n=k)).residuals.ode_sup for k in (100, 200, 400)]
    ratios = np.array(res[:-1]) / np.array(res[1:])
    assert np.all((ratios >= 1.6) & (ratios <= 2.4)), ratios


@pytest.mark.parametrize("fixture_name", ["power_square", "log_superlinear", "singular_sublinear"])
def test_mesh_refinement_consistency(request, fixture_name):
    spec = request.getfixturevalue(fixture_name)
    starts = (1.0, 0.1, 10.0)
    coarse = newton_solve(spec, SolverOptions(m=100, n=100, multistart=starts))
    fine = newton_solve(spec, SolverOptions(m=200, n=200, multistart=starts))
    assert coarse.converged and fine.converged
    gap = np.max(np.abs(fine.solution.values[::2] - coarse.solution.values))
    estimate = coarse.residuals.ode_sup * _kernel_bound(spec, coarse.solution.mesh)
    assert gap <= 4 * estimate


def test_picard_and_newton_agree_on_sublinear_instance(power_sqrt):
    opts = dict(m=100, n=100)
    p = picard_solve(power_sqrt, SolverOptions(method="Picard", **opts))
    n = newton_solve(power_sqrt, SolverOptions(multistart=(100.0,), **opts))
    cmp = compare_solutions(p, n)
    assert cmp["agree"] and not cmp["multiple_solutions_suspected"]


def test_compare_flags_distinct_solutions(power_sqrt):
    n = newton_solve(power_sqrt, SolverOptions(multistart=(100.0,), m=20, n=20))
    shifted = newton_solve(power_sqrt, SolverOptions(multistart=(100.0,), m=20, n=20))
    shifted.solution = n.solution * 1.01
    assert compare_solutions(n, shifted)["multiple_solutions_suspected"]


def test_report_serializes(log_superlinear):
    d = newton_solve(log_superlinear, SolverOptions(m=40, n=40)).to_dict()
    assert d["status"] == "Converged" and d["method"] == "Newton"
    assert d["classification"]["region"] == "Admissible"
    assert set(d["residuals"]) == {"ode_sup", "bc0", "bcT", "fixed_point"}
