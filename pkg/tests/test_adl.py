from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archcycle.adl import parse, serialize
from archcycle.lexer import ParseFailure
from archcycle.model import (
    TOP,
    BehavioralContract,
    DataflowContract,
    Direction,
    QoSContract,
    StructuralContract,
    canonicalize,
)

from conftest import corpus_text
from generators import random_architecture

FOUR_KINDS = """
architecture K {
  component A { port out o : Doc  port in back : Doc }
  component B { port in i : Doc required  port out r : Doc }
  connector ab : A.o -> B.i
  connector ba : B.r -> A.back
  contract structural on B.i { only [A] must_be_bound }
  contract behavioral on A { protocol: (o! ; back?)* }
  contract dataflow on A.o { produces size [0B, unknown] types {txt, jpg} }
  contract dataflow on B.i { requires max_size 2MB types {txt} }
  contract qos on A.o { offered_latency unknown }
  contract qos on B.r { offered_latency 12.5ms }
  contract qos on A.back { required_max_latency 40ms }
}
"""


def test_minimal_input():
    arch = parse("architecture A { component C { port out p : Doc } }")
    assert len(arch.components) == 1
    assert arch.components[0].ports[0].direction is Direction.OUT
    assert arch.connectors == ()


def test_phr_components(phr):
    assert {c.name for c in phr.components} == {
        "Client", "Authentication", "SessionServer", "GlobalSearch", "MedicalServer", "PDA", "Databases"}
    assert len(phr.connectors) == 12


def test_missing_brace_reports_eof_line():
    text = "architecture A {\n  component C { port out p : Doc }\n"
    with pytest.raises(ParseFailure) as info:
        parse(text)
    errors = info.value.errors
    assert len(errors) == 1
    assert errors[0].line == len(text.splitlines())


def test_errors_carry_positions():
    text = "architecture A {\n  component C { port out p : Doc }\n  connector k : C.p -> D.q\n}\n"
    with pytest.raises(ParseFailure) as info:
        parse(text)
    (err,) = info.value.errors
    assert (err.line, err.column) == (3, 13)  # the connector's id
    assert "dangling" in err.message


def test_syntax_error_lists_expected_tokens():
    with pytest.raises(ParseFailure) as info:
        parse("architecture A { component C { port sideways p : Doc } }")
    err = info.value.errors[0]
    assert err.line == 1 and err.expected


def test_empty_architecture_serializes():
    arch = parse("architecture A { }")
    assert " ".join(serialize(arch).split()) == "architecture A { }"


def test_phr_round_trip(phr):
    assert parse(serialize(phr)) == phr


def test_all_contract_kinds_round_trip():
    arch = parse(FOUR_KINDS)
    kinds = {type(c) for c in arch.contracts}
    assert kinds == {StructuralContract, BehavioralContract, DataflowContract, QoSContract}
    again = parse(serialize(arch))
    assert again == arch
    produced = next(c for c in again.contracts if isinstance(c, DataflowContract) and c.produced)
    assert produced.produced.size_hi is TOP


def test_size_units_are_decimal(phr):
    constraint = next(c for c in phr.contracts if isinstance(c, DataflowContract) and c.constraints)
    assert constraint.constraints.max_size == 10 * 10**6


def test_parse_is_deterministic():
    text = corpus_text("phr.adl")
    assert serialize(parse(text)) == serialize(parse(text))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9))
def test_random_round_trip(seed):
    arch = random_architecture(random.Random(seed), 10, contracts=True)
    assert parse(serialize(arch)) == canonicalize(arch)
