import random
from collections import Counter

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from stlkit.core import Node, OpKind, ap_count, neg, prop, validate, walk
from stlkit.synthesis import (
    ConfigInvalid,
    SynthConfig,
    check_config,
    sanity_check,
    synthesize,
    synthesize_batch,
)
from stlkit.syntax import IN_WORD, PRE_SYMBOL, linearize, parse


class ScriptedRandom:
    """Duck-typed random source replaying queued decisions."""

    def __init__(self, randints=(), choices=(), randoms=(), samples=(), orders=()):
        self.randints = list(randints)
        self.choices = list(choices)
        self.randoms = list(randoms)
        self.samples = list(samples)
        self.orders = list(orders)

    def randint(self, a, b):
        value = self.randints.pop(0)
        assert a <= value <= b, (a, value, b)
        return value

    def choice(self, seq):
        value = self.choices.pop(0)
        assert value in seq
        return value

    def random(self):
        return self.randoms.pop(0)

    def sample(self, population, k):
        value = self.samples.pop(0)
        assert len(value) == k
        return list(value)

    def shuffle(self, items):
        order = self.orders.pop(0)
        items[:] = order


class TestWorkedExample:
    def test_worked_example_decision_sequence(self):
        # Force sub-lists [prop_3, prop_1], [prop_2] with picks
        # (equal, negation), (globally), and until[10,30] at assembly.
        rng = ScriptedRandom(
            randints=[3, 2, 10, 30],  # ap count, sub-list count, a, b
            orders=[[prop(3), prop(1), prop(2)]],
            samples=[[2]],  # split point after the second prop
            choices=[
                OpKind.NEGATION,
                OpKind.EQUAL,
                OpKind.GLOBALLY,
                OpKind.UNTIL,
            ],
            randoms=[
                0.99,  # no extra unary on first sub-tree
                0.0,   # extra unary on the singleton sub-tree
                0.0,   # globally stays untimed
                0.99,  # stop adding unaries
                0.99,  # until gets a bounded interval
                0.99,  # not infinite
            ],
        )
        f = synthesize(SynthConfig(max_aps=3, seed=0), rng=rng)
        assert linearize(f, PRE_SYMBOL) == "U[10,30] <-> negation prop_3 prop_1 G prop_2"

    def test_single_prop_zero_operator_path(self):
        rng = ScriptedRandom(
            randints=[1, 1],
            orders=[[prop(1)]],
            randoms=[0.99],  # no extra unary
        )
        f = synthesize(SynthConfig(max_aps=1, seed=0), rng=rng)
        assert linearize(f, IN_WORD) == "prop_1"


class TestSynthesize:
    def test_deterministic_per_seed(self):
        cfg = SynthConfig(max_aps=6, seed=123)
        a = [linearize(f, IN_WORD) for f in synthesize_batch(cfg, 10)[0]]
        b = [linearize(f, IN_WORD) for f in synthesize_batch(cfg, 10)[0]]
        assert a == b

    def test_different_seeds_differ(self):
        texts = {
            linearize(synthesize(SynthConfig(max_aps=6, seed=s)), IN_WORD)
            for s in range(20)
        }
        assert len(texts) > 1

    @given(st.integers(0, 10_000))
    @settings(max_examples=200)
    def test_every_seed_valid_and_sane(self, seed):
        cfg = SynthConfig(max_aps=7, seed=seed)
        f = synthesize(cfg)
        assert validate(f) == []
        assert sanity_check(f) == []
        assert 1 <= ap_count(f) <= 7

    def test_first_thousand_seeds_exhaustively(self):
        for seed in range(1_000):
            f = synthesize(SynthConfig(max_aps=7, seed=seed))
            assert validate(f) == []
            assert 1 <= ap_count(f) <= 7

    @given(st.integers(0, 5_000))
    @settings(max_examples=100)
    def test_binary_operator_accounting(self, seed):
        # a binary tree with L leaves always carries L-1 binary nodes
        f = synthesize(SynthConfig(max_aps=7, seed=seed))
        binary = sum(
            1 for n in walk(f) if isinstance(n, Node) and n.op.arity == 2
        )
        assert binary == ap_count(f) - 1

    def test_roundtrip_of_synthesized_output(self):
        for seed in range(50):
            f = synthesize(SynthConfig(max_aps=5, seed=seed))
            text = linearize(f, IN_WORD)
            assert linearize(parse(text, IN_WORD), IN_WORD) == text


class TestSanityCheck:
    def test_consecutive_negation_flagged(self):
        violations = sanity_check(neg(neg(prop(1))))
        assert [v.rule for v in violations] == ["no-consecutive-negation"]

    def test_nested_timed_globally_finally_ok(self):
        f = parse("globally[0,34] finally[0,98] prop_1", IN_WORD)
        assert sanity_check(f) == []

    def test_atom_passes(self):
        assert sanity_check(prop(1)) == []

    def test_empty_interval_flagged(self):
        f = parse("finally[5,5] prop_1", IN_WORD)
        assert [v.rule for v in sanity_check(f)] == ["interval-strict-order"]

    def test_separated_negations_ok(self):
        assert sanity_check(neg(parse("finally negation prop_1", IN_WORD))) == []

    def test_unknown_rule_rejected(self):
        with pytest.raises(ConfigInvalid):
            sanity_check(prop(1), ("no-such-rule",))


class TestBatch:
    def test_fixed_seed_reproducible(self):
        cfg = SynthConfig(max_aps=4, seed=7)
        first, report = synthesize_batch(cfg, 3)
        second, _ = synthesize_batch(cfg, 3)
        assert [linearize(f, IN_WORD) for f in first] == [
            linearize(f, IN_WORD) for f in second
        ]
        assert report.requested == 3 and report.produced == 3

    def test_all_outputs_sane(self):
        formulas, report = synthesize_batch(SynthConfig(max_aps=7, seed=11), 2000)
        assert len(formulas) == 2000
        for f in formulas:
            assert not sanity_check(f)
        assert report.rejected >= 0

    def test_ap_histogram_roughly_uniform(self):
        n, max_aps = 10_000, 7
        formulas, _ = synthesize_batch(SynthConfig(max_aps=max_aps, seed=5), n)
        counts = Counter(ap_count(f) for f in formulas)
        expected = n / max_aps
        sigma = (n * (1 / max_aps) * (1 - 1 / max_aps)) ** 0.5
        for k in range(1, max_aps + 1):
            assert abs(counts[k] - expected) <= 3 * sigma, (k, counts[k])

    def test_invalid_count(self):
        with pytest.raises(ConfigInvalid):
            synthesize_batch(SynthConfig(), 0)


class TestConfig:
    def test_defaults_valid(self):
        check_config(SynthConfig())

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"max_aps": 0},
            {"p_untimed": 1.5},
            {"p_infinite": -0.1},
            {"bound_low_range": (10, 5)},
            {"bound_high_range": (5, 4)},
            {"bound_high_range": (0, 50)},
            {"forbidden_patterns": ("bogus",)},
            {"resample_cap": 0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ConfigInvalid):
            check_config(SynthConfig(**kwargs))

    def test_rng_isolation(self):
        # explicit rng overrides the seed
        rng = random.Random(99)
        a = synthesize(SynthConfig(max_aps=5, seed=0), rng=rng)
        b = synthesize(SynthConfig(max_aps=5, seed=0), rng=random.Random(99))
        assert linearize(a, IN_WORD) == linearize(b, IN_WORD)
