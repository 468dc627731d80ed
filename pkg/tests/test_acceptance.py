"""Acceptance criteria 1-9.

Each criterion records PASS/FAIL plus the computed numbers; the summary is
printed at the end of the pytest run (see conftest.py) or by running this
file directly. Every comparison is exact: values are Fractions and the
expected values below are written as exact rationals. Sub-claims that the
implementation cannot reproduce are kept verbatim in strict xfail tests so
they fail loudly if anything changes.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction as F

import pytest

import oracles
from conftest import ACCEPTANCE
from causalgames.analysis import blame, instrumental_control_incentive, intent, response_incentive
from causalgames.counterfactual import counterfactual
from causalgames.efg import efg2maid, maid2efg, subgame_roots, verify_equivalence
from causalgames.equilibrium import (
    behavioural_ne, flat_ne, is_spe, pure_ne, spe, thpe, trembles_converge, undominated, verify_ne,
)
from causalgames.errors import ExplosionGuard, NoSpeFound
from causalgames.fixtures import (
    GAMES, b2_game1, b2_game2, b2_game3, c2_family, cirl_reduced, insurance, job_market, warehouse,
)
from causalgames.inference import expected_utilities, joint
from causalgames.policy import DecisionRule, MixedPolicy, NoEquivalent, PolicyProfile, behavioural_from_mixed
from causalgames.query import Intervention, conditional, interventional, prob_target, quantify, resolve_rule, \
    utility_target
from causalgames.subgame import enumerate_subdiagrams, instantiate_subgames


class Checks:
    def __init__(self, number: int):
        self.number = number
        self.items: list[tuple[str, bool, str]] = []

    def __call__(self, name: str, ok: bool, got="") -> bool:
        self.items.append((name, bool(ok), str(got)))
        return ok

    def record(self, known_failures=()):
        failed = [n for n, ok, _ in self.items if not ok]
        detail = "; ".join(f"{n}={g}" if g else n for n, ok, g in self.items if not ok) or \
            f"{len(self.items)} checks"
        ACCEPTANCE[self.number] = (not failed, ("failed: " + detail) if failed else detail)
        unexpected = [n for n in failed if n not in known_failures]
        assert not unexpected, f"criterion {self.number}: {unexpected}"


def profile(m, **refs) -> PolicyProfile:
    return PolicyProfile({d: resolve_rule(m, d, r) for d, r in refs.items()})


# 1 ----------------------------------------------------------------------------

def job_market_queries() -> dict:
    m = job_market()
    U1 = [utility_target(1)]
    g = {"D1": "g"}
    out = {
        "1a": conditional(m, U1, g).as_set(),
        "1b": conditional(m, U1, policy_evidence={"D1": "always_g"}).as_set(),
        "2a": interventional(m, U1, Intervention("post", do=g)).as_set(),
        "2b": interventional(m, U1, Intervention("pre", rules={"D1": resolve_rule(m, "D1", "lottery")})).as_set(),
        "3a": counterfactual(m, U1, Intervention("post", do=g), {"D1": "ng"}).as_set(),
        "3b": counterfactual(m, U1, Intervention("pre", rules={"D1": resolve_rule(m, "D1", "always_g")}),
                             policy_evidence={"D1": "never_g"}).as_set(),
    }
    return out


JOB_MARKET_EXPECTED = {"1a": {F(7, 2), F(4)}, "1b": {F(7, 2)}, "2a": {F(-3, 2), F(7, 2)}, "2b": {F(17, 4)},
          "3a": {F(7, 2)}, "3b": {F(7, 2)}}


def test_criterion_1_job_market_queries():
    c = Checks(1)
    t = time.perf_counter()
    got = job_market_queries()
    elapsed = time.perf_counter() - t
    for k, want in JOB_MARKET_EXPECTED.items():
        c(f"query {k}", got[k] == want, sorted(got[k]))
    c("runtime < 5 s", elapsed < 5, f"{elapsed:.2f}s")
    c.record(known_failures={"query 3a"})


@pytest.mark.xfail(strict=True, reason="post-policy counterfactual includes NE that do not hire after g; see ledger")
def test_criterion_1_query_3a_exact():
    assert job_market_queries()["3a"] == JOB_MARKET_EXPECTED["3a"]


# 2 ----------------------------------------------------------------------------

def test_criterion_2_job_market_families():
    c = Checks(2)
    m = job_market()
    eq = behavioural_ne(m)
    eus = {expected_utilities(m, p)[1] for p in eq.profiles}
    c("worker utilities", eus == {F(5), F(4), F(7, 2)}, sorted(eus))
    c("three families", len({a["family"] for a in eq.annotations}) == 3)
    never = [p for p in eq.profiles if p.rules["D1"] == resolve_rule(m, "D1", "never_g")]
    always = [p for p in eq.profiles if p.rules["D1"] == resolve_rule(m, "D1", "always_g")]
    q_never = {p.rules["D2"].p("j", ("g",)) for p in never}
    q_always = {p.rules["D2"].p("j", ("ng",)) for p in always}
    c("family 1 endpoints", q_never == {F(0), F(1)}, sorted(q_never))
    c("family 3 endpoints", q_always == {F(0), F(3, 5)}, sorted(q_always))
    mixed = [p for p in eq.profiles if p not in never + always]
    c("mixed family present", len(mixed) >= 1 and all(expected_utilities(m, p)[1] == 4 for p in mixed))
    c.record()


# 3 ----------------------------------------------------------------------------

def test_criterion_3_warehouse():
    c = Checks(3)
    m = warehouse()
    ne_only = profile(m, D1="q", D2="always_p")
    spe_only = profile(m, D1="nq", D2="p_iff_q")
    perfect = profile(m, D1="q", D2="p_iff_q")
    c("(q, always-p) NE", verify_ne(m, ne_only)[0])
    c("(q, always-p) not SPE", not is_spe(m, ne_only)[0])
    c("(nq, p-iff-q) SPE", verify_ne(m, spe_only)[0] and is_spe(m, spe_only)[0])
    c("(nq, p-iff-q) not THPE", not undominated(m, spe_only) and not trembles_converge(m, spe_only))
    c("(q, p-iff-q) THPE", verify_ne(m, perfect)[0] and undominated(m, perfect) and trembles_converge(m, perfect))
    th = thpe(m).profiles
    c("THPE set", perfect in th and spe_only not in th and ne_only not in th)
    # robot two trembles with eps after q and eps' after nq
    eps = eps2 = F(1, 100)
    shaky = DecisionRule.from_table(m, "D2", {("q",): {"p": 1 - eps, "np": eps}, ("nq",): {"p": eps2, "np": 1 - eps2}})
    eu_q = expected_utilities(m, PolicyProfile({"D1": resolve_rule(m, "D1", "q"), "D2": shaky}))[1]
    eu_nq = expected_utilities(m, PolicyProfile({"D1": resolve_rule(m, "D1", "nq"), "D2": shaky}))[1]
    c("EU q = 2 + 2 eps", eu_q == 2 + 2 * eps, eu_q)
    c("EU nq = 2 - eps'", eu_nq == 2 - eps2, eu_nq)
    c.record()


# 4 ----------------------------------------------------------------------------

def test_criterion_4_subgame_structure():
    c = Checks(4)
    wh = warehouse()
    proper = [sd for sd in enumerate_subdiagrams(wh, "s") if sd.proper]
    c("warehouse: exactly one proper s-subdiagram", len(proper) == 1,
      [sorted(sd.nodes) for sd in proper])
    c("warehouse: two feasible subgames each",
      all(sum(s.feasible for s in instantiate_subgames(wh, sd)) == 2 for sd in proper))
    mjm = job_market(modified=True)
    proper = [sd for sd in enumerate_subdiagrams(mjm, "s") if sd.proper]
    c("modified job market: three proper s-subdiagrams", len(proper) == 3, len(proper))
    e, _ = maid2efg(mjm)
    c("modified job market EFG: no proper subgames", subgame_roots(e) == [], subgame_roots(e))
    c.record(known_failures={"warehouse: exactly one proper s-subdiagram"})


@pytest.mark.xfail(strict=True, reason="{B, D2, U2} is closed under s-reachability as well; see ledger")
def test_criterion_4_warehouse_single_subdiagram():
    assert len([sd for sd in enumerate_subdiagrams(warehouse(), "s") if sd.proper]) == 1


# 5 ----------------------------------------------------------------------------

def test_criterion_5_counterexamples():
    c = Checks(5)
    m1 = b2_game1()
    c("game 1: no pure NE", pure_ne(m1).profiles == [])
    eq = behavioural_ne(m1).profiles
    ok = len(eq) == 1
    if ok:
        jt = joint(m1, eq[0])
        ab = jt.marginal(["A", "B"])
        ok = ab == {(1, 1): F(1, 2), (0, 0): F(1, 2)} and jt.marginal(["D2"]) == {(0,): F(1, 2), (1,): F(1, 2)}
    c("game 1: unique mixed NE (1/2 ab + 1/2 not-a not-b, 1/2 d)", ok, eq)
    m3 = b2_game3()
    A, B = "A", "B"
    p1 = {A: DecisionRule.from_table(m3, A, {(1,): {1: 1}, (0,): {0: 1}}),
          B: DecisionRule.from_table(m3, B, {(1,): {1: 1}, (0,): {0: 1}})}
    p2 = {A: DecisionRule.constant(m3, A, 1), B: DecisionRule.constant(m3, B, 0)}
    mu = MixedPolicy.of(1, [(p1, F(1, 2)), (p2, F(1, 2))])
    verdict = behavioural_from_mixed(m3, mu)
    c("game 3: mu has no behavioural equivalent", isinstance(verdict, NoEquivalent), verdict)
    try:
        spe(b2_game2())
        c("game 2: NoSpeFound", False)
    except NoSpeFound:
        c("game 2: NoSpeFound", True)
    c.record()


# 6 ----------------------------------------------------------------------------

def test_criterion_6_decomposition_family():
    c = Checks(6)
    counters = []
    for k in (1, 2, 3, 4):
        m = c2_family(k)
        t = time.perf_counter()
        res = spe(m)
        elapsed = time.perf_counter() - t
        counters.append(res.stage_profiles)
        ok = len(res.profiles) == 1
        if ok:
            p = res.profiles[0]
            ok = p.rules["D1"] == DecisionRule.constant(m, "D1", 1) and all(
                p.rules[d] == DecisionRule.uniform(m, d) for d in m.decisions if d != "D1")
        c(f"k={k}: heads plus all-1/2 mixing", ok, res.profiles)
        if k == 4:
            c("k=4 within 10 s", elapsed < 10, f"{elapsed:.2f}s")
    steps = [b - a for a, b in zip(counters, counters[1:])]
    c("stage-profile counters linear in k", len(set(steps)) == 1 and steps[0] > 0, counters)
    try:
        flat_ne(c2_family(4))
        c("k=4 flat enumeration skipped by cap", False)
    except ExplosionGuard:
        c("k=4 flat enumeration skipped by cap", True)
    for k in (1, 2):
        m = c2_family(k)
        flat = flat_ne(m).profiles
        dec = spe(m).profiles
        c(f"k={k}: flat and decomposed agree",
          len(flat) == 1 and joint(m, flat[0]).distribution() == joint(m, dec[0]).distribution())
    c.record()


# 7 ----------------------------------------------------------------------------

def insurance_numbers() -> dict:
    m = insurance()
    switch = [prob_target(C=1, D3=2), prob_target(C=2, D3=1)]
    U3 = [utility_target(3)]
    ban = Intervention.named(m, "ban")
    alt = Intervention.named(m, "ban_free_switch")
    pre_sw, post_sw = interventional(m, switch), interventional(m, switch, ban)
    pre_u, post_u, alt_u = interventional(m, U3), interventional(m, U3, ban), interventional(m, U3, alt)
    prices = lambda ans: {(p.rules["D1"], p.rules["D2"]) for p, _ in ans.trace}
    return {
        "switching": (quantify(post_sw, "mean") - quantify(pre_sw, "mean")) * 100,
        "dU3": quantify(post_u, "mean") - quantify(pre_u, "mean"),
        "dU3_alt": quantify(alt_u, "mean") - quantify(pre_u, "mean"),
        "pre_prices": prices(pre_u),
        "post_prices": prices(post_u),
        "model": m,
    }


def test_criterion_7_insurance():
    c = Checks(7)
    r = insurance_numbers()
    m = r["model"]
    c("switching effect -14.4%", round(r["switching"], 3) == F(-144, 10), float(r["switching"]))
    c("dE[U3] under I = -28.88", r["dU3"] == F(-2888, 100), float(r["dU3"]))
    c("dE[U3] under I' = +20", r["dU3_alt"] == 20, r["dU3_alt"])
    pre = {(d1.action((1,)), d1.action((2,)), d2.action((1,)), d2.action((2,))) for d1, d2 in r["pre_prices"]}
    c("pre-intervention prices 206/244", pre == {(244, 206, 206, 244)}, pre)
    post = {(d1.action((1,)), d2.action((1,))) for d1, d2 in r["post_prices"]
            if d1.is_constant_in(["C"]) and d2.is_constant_in(["C"])}
    c("post-intervention prices 288/250", post == {(288, 250)} and len(r["post_prices"]) == 1, post)
    del m
    c.record(known_failures={"dE[U3] under I = -28.88"})


@pytest.mark.xfail(strict=True, reason="exact value is -144/5 = -28.8; see ledger")
def test_criterion_7_delta_u3_exact():
    assert insurance_numbers()["dU3"] == F(-2888, 100)


# 8 ----------------------------------------------------------------------------

def test_criterion_8_blame_intent_incentives():
    c = Checks(8)
    m = warehouse()
    prof = profile(m, D1="q", D2="p_iff_q")
    db = blame(m, prof, "D1", "q", {"B": "b"}, 10, alternative="nq")
    c("db_S(q, nq, B=b) = 1/3", db == F(1, 3), db)
    verdict = intent(m, prof, "D2", "p", {"U1": 0})
    c("robot 2 does not intend U1=0", not verdict.exists and not verdict.forall)
    cirl = cirl_reduced()
    c("RI(PH)", response_incentive(cirl, "PH"))
    c("ICI(S3)", instrumental_control_incentive(cirl, "S3"))
    c.record()


# 9 ----------------------------------------------------------------------------

def test_criterion_9_property_suites():
    c = Checks(9)
    n, bad = oracles.dsep_agrees_on_all_dags(4)
    c(f"d-separation vs independence ({n} queries)", not bad, bad[:3])
    n, bad = oracles.requisite_agrees_on_all_dags(4)
    c(f"requisite node vs two parameterisations ({n} queries)", not bad, bad[:3])
    small = [name for name, fn in GAMES.items() if fn().decisions and oracles.pure_profile_count(fn()) <= 5000]
    wrong = [name for name in small if not oracles.pure_ne_matches(GAMES[name]())]
    c(f"pure NE vs deviation brute force ({len(small)} games)", not wrong, wrong)
    mismatched = []
    for name, fn in GAMES.items():
        m = fn()
        try:
            e, mp = maid2efg(m)
            verify_equivalence(e, m, mp)
            m2, mp2 = efg2maid(e)
            verify_equivalence(e, m2, mp2)
        except Exception as exc:  # noqa: BLE001 - any failure is a mismatch here
            mismatched.append((name, type(exc).__name__))
    c(f"round-trip conversion utilities ({len(GAMES)} games)", not mismatched, mismatched)
    rng = random.Random(2)
    bad_rules = 0
    from causalgames.counterfactual import verify_canonical
    for _ in range(100):
        n_ctx, n_act = rng.randint(1, 4), rng.randint(2, 3)
        rows = oracles.random_rule_table(rng, n_ctx, n_act)
        rule = DecisionRule("D", ("X",), tuple((i,) for i in range(n_ctx)), tuple(range(n_act)),
                            tuple(tuple(r) for r in rows))
        if oracles.canonical_marginal(rows) != rows or not verify_canonical(None, rule):
            bad_rules += 1
    c("canonical rule marginalisation identity (100 random rules)", bad_rules == 0, bad_rules)
    c.record()


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
