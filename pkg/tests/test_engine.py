import json
import threading

import numpy as np
import pytest

from smbo.archive import Archive, ArchiveRow
from smbo.design import Design, lhs_design
from smbo.engine import (EvalTimeBudget, MaxEvals, MaxIters, MBOControl, MBOState, TargetValue, WallTime,
                         check_termination, default_criterion, final_point, make_surrogate, mbo,
                         propose_points, surrogate_kind)
from smbo.focus import FocusConfig
from smbo.forest import ForestConfig, RandomForest
from smbo.gp import GaussianProcess
from smbo.infill import EI, LCB, QLCB, ConstantLiar
from smbo.space import ParamSpace, box, categorical, continuous, integer

FAST = FocusConfig(2, 3, 300)


def cosine_mixture(a):
    x = a["x1"]
    return float(-0.1 * np.cos(5 * np.pi * x) + x**2)


def quadratic(a):
    return float(sum((v - 0.3) ** 2 for v in a.values()))


def init_of(space, n, seed=0):
    return lhs_design(space, n, np.random.default_rng(seed))


class TestDefaults:
    def test_criterion_defaults(self, svm_space):
        assert default_criterion(box([0], [1])) == LCB(1.0)
        assert default_criterion(ParamSpace([integer("n", 0, 5)])) == LCB(1.0)
        assert default_criterion(svm_space) == LCB(2.0)

    def test_surrogate_defaults(self, svm_space):
        assert surrogate_kind(box([0], [1])) == "gp"
        assert surrogate_kind(svm_space) == "forest"
        dependent = ParamSpace([continuous("a", 0, 1), continuous("b", 0, 1, requires={"a": 0.5})])
        assert surrogate_kind(dependent) == "forest"
        rng = np.random.default_rng(0)
        assert isinstance(make_surrogate(box([0], [1]), MBOControl(), rng), GaussianProcess)
        assert isinstance(make_surrogate(svm_space, MBOControl(), rng), RandomForest)

    def test_gp_refused_on_categorical(self, svm_space):
        with pytest.raises(ValueError):
            make_surrogate(svm_space, MBOControl(surrogate="gp"), np.random.default_rng(0))

    def test_control_validation(self):
        with pytest.raises(ValueError):
            MBOControl(termination=()).validate()
        with pytest.raises(ValueError):
            MBOControl(termination=(MaxEvals(0),)).validate()
        with pytest.raises(ValueError):
            MBOControl(final_point="median").validate()

    def test_default_init_is_4d(self):
        res = mbo(quadratic, box([0, 0], [1, 1]), control=MBOControl(termination=(MaxIters(0),)), rng=0)
        assert len(res.archive) == 8


class TestLoop:
    def test_zero_iterations_returns_best_initial(self):
        sp = box([-1], [1])
        init = init_of(sp, 5)
        res = mbo(cosine_mixture, sp, init, MBOControl(termination=(MaxIters(0),)), rng=0)
        assert len(res.archive) == 5
        assert res.y == min(cosine_mixture(a) for a in init)

    def test_toy_improves_on_initial_design(self):
        sp = box([-1], [1])
        init = init_of(sp, 4)
        res = mbo(cosine_mixture, sp, init, MBOControl(criterion=EI(), focus=FAST,
                                                       termination=(MaxIters(10),)), rng=1)
        assert res.y <= min(cosine_mixture(a) for a in init)
        assert res.termination == "max_iters(10)"
        best = res.archive.running_best()
        assert np.all(np.diff(best) <= 0)

    def test_budget_accounting_and_validity(self, svm_space):
        calls = []

        def f(a):
            calls.append(a)
            return a["C"] ** 2 / 10 + (0.0 if a["gamma"] is None else 0.5)

        res = mbo(f, svm_space, init_of(svm_space, 6),
                  MBOControl(criterion=QLCB(2.0, 3), focus=FAST, termination=(MaxIters(4),),
                             forest=ForestConfig(num_trees=50)), rng=2)
        assert len(calls) == len(res.archive) == 6 + 3 * 4
        for r in res.archive:
            svm_space.check(r.x)
        assert res.x in [r.x for r in res.archive]

    def test_objective_sees_transformed_values(self, svm_space):
        seen = []
        mbo(lambda a: seen.append(a) or 0.0, svm_space, init_of(svm_space, 4),
            MBOControl(termination=(MaxIters(0),)), rng=0)
        assert all(2**-5 <= a["C"] <= 2**5 for a in seen)

    def test_bit_reproducible(self):
        sp = box([0, 0], [1, 1])
        ctl = MBOControl(criterion=EI(), focus=FAST, termination=(MaxIters(5),))
        a = mbo(quadratic, sp, init_of(sp, 5), ctl, rng=7)
        b = mbo(quadratic, sp, init_of(sp, 5), ctl, rng=7)
        assert a.archive.to_csv().split("\n")[0] == b.archive.to_csv().split("\n")[0]
        assert [r.x for r in a.archive] == [r.x for r in b.archive]
        assert [r.y for r in a.archive] == [r.y for r in b.archive]

    def test_constant_liar_batches(self):
        sp = box([0, 0], [1, 1])
        res = mbo(quadratic, sp, init_of(sp, 5),
                  MBOControl(criterion=ConstantLiar("mean", 3), focus=FAST, termination=(MaxIters(2),)), rng=0)
        assert len(res.archive) == 11
        assert [d["refits"] for d in res.diagnostics] == [2, 2]

    def test_parallel_batch_evaluation(self):
        sp = box([0, 0], [1, 1])
        threads = set()

        def f(a):
            threads.add(threading.get_ident())
            return quadratic(a)

        res = mbo(f, sp, init_of(sp, 4), MBOControl(criterion=QLCB(1.0, 4), focus=FAST,
                                                    termination=(MaxIters(2),), workers=4), rng=0)
        assert len(res.archive) == 12 and len(threads) >= 1


class TestFailures:
    def test_impute_worst(self):
        sp = box([0], [1])

        def f(a):
            if a["x1"] > 0.5:
                raise RuntimeError("boom")
            return a["x1"]

        init = Design([{"x1": 0.1}, {"x1": 0.3}, {"x1": 0.9}, {"x1": 0.2}])
        res = mbo(f, sp, init, MBOControl(criterion=EI(), focus=FAST, termination=(MaxIters(3),)), rng=0)
        bad = res.archive.rows[2]
        assert bad.imputed and "boom" in bad.error
        assert bad.y == pytest.approx(0.3 + 0.1 * 0.2)
        assert len(res.archive) == 7 and res.y == min(r.y for r in res.archive if not r.imputed)

    def test_abort_keeps_partial_archive(self):
        sp = box([0], [1])
        init = Design([{"x1": 0.1}, {"x1": 0.9}, {"x1": 0.3}])

        def f(a):
            if a["x1"] > 0.5:
                raise ValueError("nope")
            return a["x1"]

        res = mbo(f, sp, init, MBOControl(on_eval_error="abort", termination=(MaxIters(5),)), rng=0)
        assert len(res.archive) == 2 and res.termination.startswith("error(")
        assert res.archive.rows[-1].y is None

    def test_non_finite_result_is_an_error(self):
        sp = box([0], [1])
        res = mbo(lambda a: float("nan"), sp, Design([{"x1": 0.5}]),
                  MBOControl(on_eval_error="abort", termination=(MaxIters(1),)), rng=0)
        assert "invalid value" in res.archive.rows[0].error and res.x is None

    def test_constant_archive_still_proposes(self):
        sp = box([0, 0], [1, 1])
        res = mbo(lambda a: 1.0, sp, init_of(sp, 5), MBOControl(criterion=EI(), focus=FAST,
                                                                termination=(MaxIters(3),)), rng=0)
        assert len(res.archive) == 8
        for r in res.archive:
            sp.check(r.x)

    def test_fit_failure_falls_back_to_random(self):
        sp = box([0, 0], [1, 1])
        archive = Archive(sp)
        archive.append(ArchiveRow({"x1": 0.5, "x2": 0.5}, 1.0, 0.0, "initial", 0))
        state = MBOState(sp, MBOControl(criterion=LCB(1.0)), LCB(1.0), archive, np.random.default_rng(0))
        rows = propose_points(state)
        assert len(rows) == 1 and state.diagnostics[-1]["fallback"]

    def test_proposals_not_in_archive(self):
        sp = ParamSpace([integer("n", 0, 2)])
        res = mbo(lambda a: float(a["n"]), sp, Design([{"n": 0}, {"n": 1}]),
                  MBOControl(criterion=LCB(1.0), focus=FAST, surrogate="forest",
                             forest=ForestConfig(num_trees=20, min_node_size=1), termination=(MaxIters(1),)), rng=0)
        assert sorted(r.x["n"] for r in res.archive) == [0, 1, 2]


class TestTermination:
    def state(self, ys, iteration=0):
        sp = box([0], [1])
        a = Archive(sp)
        for y in ys:
            a.append(ArchiveRow({"x1": 0.5}, y, 0.5, "initial", 0))
        s = MBOState(sp, MBOControl(), LCB(), a, np.random.default_rng(0))
        s.iteration = iteration
        return s

    def test_max_evals(self):
        assert check_termination(self.state([1, 2, 3]), [MaxEvals(3)]) == "max_evals(3)"

    def test_target(self):
        assert check_termination(self.state([3, 0.5]), [MaxEvals(10), TargetValue(1.0)]) == "target_value(1)"

    def test_continue(self):
        s = self.state([3, 2], iteration=1)
        assert check_termination(s, [MaxEvals(5), MaxIters(2), TargetValue(0.0), WallTime(1e6),
                                     EvalTimeBudget(100)]) is None

    def test_first_rule_in_order_wins(self):
        s = self.state([1, 2], iteration=5)
        assert check_termination(s, [MaxIters(5), MaxEvals(2)]) == "max_iters(5)"
        assert check_termination(s, [MaxEvals(2), MaxIters(5)]) == "max_evals(2)"

    def test_eval_time_budget(self):
        assert check_termination(self.state([1, 2, 3]), [EvalTimeBudget(1.5)]) == "eval_time_budget(1.5s)"

    def test_wall_time(self):
        assert check_termination(self.state([1]), [WallTime(0.0)]) is not None


class TestFinalPoint:
    def archive(self, ys):
        sp = box([0], [1])
        a = Archive(sp)
        for i, y in enumerate(ys):
            a.append(ArchiveRow({"x1": i / 10}, y, 0.0, "initial", 0))
        return a

    def test_single_row(self):
        assert final_point(self.archive([4.0])) == ({"x1": 0.0}, 4.0)

    def test_best_observed(self):
        assert final_point(self.archive([3.0, 1.0, 2.0]))[1] == 1.0

    def test_all_imputed(self):
        sp = box([0], [1])
        a = Archive(sp)
        a.append(ArchiveRow({"x1": 0.1}, 5.0, 0.0, "initial", 0, "err", True))
        with pytest.raises(ValueError):
            final_point(a)

    def test_model_predicted(self):
        """Noisy duplicates: the lucky low draw is not the lowest posterior mean."""
        sp = box([0], [1])
        a = Archive(sp)
        rows = [(0.2, 1.0), (0.2, 1.1), (0.2, 0.9), (0.5, 0.2), (0.5, 0.8), (0.5, 1.4), (0.8, 0.5), (0.8, 0.6)]
        for x, y in rows:
            a.append(ArchiveRow({"x1": x}, y, 0.0, "initial", 0))
        ctl = MBOControl()
        x, yhat = final_point(a, "model_predicted", ctl, np.random.default_rng(0))
        model = make_surrogate(sp, ctl, np.random.default_rng(0)).fit(a.X(), a.Y())
        mu = model.predict(a.X())
        assert yhat == pytest.approx(mu.min()) and x == a.rows[int(np.argmin(mu))].x
        assert x["x1"] == 0.8 and final_point(a)[0]["x1"] == 0.5


class TestExport:
    def test_csv_and_summary(self, svm_space):
        res = mbo(lambda a: a["C"], svm_space, init_of(svm_space, 4),
                  MBOControl(focus=FAST, termination=(MaxIters(1),), forest=ForestConfig(num_trees=20)), rng=0)
        lines = res.archive.to_csv().strip().split("\n")
        assert lines[0] == "iter,origin,kernel,C,gamma,y,eval_seconds,error,imputed"
        assert len(lines) == 6
        summary = json.loads(res.to_json())
        assert summary["termination"] == "max_iters(1)" and summary["control"]["criterion"] is None
        assert summary["n_evals"] == 5
