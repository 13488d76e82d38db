"""Compiler: diagnostics, scope resolution, prompts, stage assembly, hashing."""

import pytest

from lexcraft import canon
from lexcraft.compiler import (
    DirectiveExtender,
    ExecutionPlan,
    LayoutStage,
    StyleStage,
    compile_lexicon,
    extend_prompt,
    validate,
)
from lexcraft.errors import StrictWarnings, ValidationFailed
from lexcraft.lexicon import ImaginationLevel, VisualLexicon
from lexcraft.moodboard import NormRect

from helpers import build_random_board


@pytest.fixture(scope="module")
def roles():
    return build_random_board(seed=33)


def _lex(roles, n_subjects=1):
    lex = VisualLexicon("lex_0001")
    ids = []
    for i in range(n_subjects):
        x = 0.02 + 0.13 * i
        token = roles.board.get_token(roles.subjects[i % len(roles.subjects)])
        ids.append(lex.place_copy(token, NormRect(x, 0.1, 0.12, 0.2)))
    return lex, ids


def _codes(diags):
    return [d.code for d in diags]


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def test_unresolved_ref_is_error(roles):
    lex, (s,) = _lex(roles)
    lex.set_name(s, "owl")
    t = lex.create_textual("a #ghost watches #owl", (0.5, 0.5))
    diags = validate(lex, roles.board)
    assert _codes(diags) == ["E001"]
    assert diags[0].ids == (t,)
    assert "#ghost" in diags[0].message


def test_ref_to_non_subject_name_is_error(roles):
    lex, (s,) = _lex(roles)
    c = lex.place_copy(roles.board.get_token(roles.colors[0]), NormRect(0.8, 0.8, 0.1, 0.1))
    lex.set_name(c, "accent")
    lex.create_textual("use #accent", (0.5, 0.5))
    diags = validate(lex, roles.board)
    assert _codes(diags) == ["E001"]
    assert "not a subject" in diags[0].message


def test_duplicate_refs_reported_once_per_instance(roles):
    lex, _ = _lex(roles)
    lex.create_textual("#ghost and #ghost again", (0.5, 0.5))
    assert _codes(validate(lex, roles.board)) == ["E001"]


def test_dangling_reference_is_error(roles):
    lex, (s,) = _lex(roles)
    c = lex.place_copy(roles.board.get_token(roles.colors[0]), NormRect(0.8, 0.8, 0.1, 0.1))
    t = lex.create_textual("x", (0, 0))
    lex.group([c, t])
    doc = lex.to_doc()
    doc["instances"] = [d for d in doc["instances"] if d["instance_id"] != c]
    broken = VisualLexicon.from_doc(doc)
    assert "E002" in _codes(validate(broken, roles.board))


def test_empty_lexicon_is_error(roles):
    lex = VisualLexicon("lex_0001")
    assert _codes(validate(lex, roles.board)) == ["E101"]
    lex.create_textual("a rainy alley", (0.5, 0.5))
    assert validate(lex, roles.board) == []


def test_subject_cap_warning(roles):
    lex, ids = _lex(roles, n_subjects=7)
    diags = validate(lex, roles.board)
    assert _codes(diags) == ["W001"]
    assert diags[0].ids == tuple(ids)
    assert not diags[0].is_error


def test_multiple_styles_warning(roles):
    lex, _ = _lex(roles)
    lex.place_copy(roles.board.get_token(roles.styles[0]), NormRect(0.7, 0.7, 0.1, 0.1))
    assert validate(lex, roles.board) == []
    lex.place_copy(roles.board.get_token(roles.styles[1]), NormRect(0.85, 0.7, 0.1, 0.1))
    assert _codes(validate(lex, roles.board)) == ["W002"]


def test_overlap_warning(roles):
    lex = VisualLexicon("lex_0001")
    token = roles.board.get_token(roles.subjects[0])
    a = lex.place_copy(token, NormRect(0.1, 0.1, 0.4, 0.4))
    b = lex.place_copy(token, NormRect(0.1, 0.1, 0.4, 0.4))  # IoU 1.0
    diags = validate(lex, roles.board)
    assert _codes(diags) == ["W003"]
    assert diags[0].ids == (a, b)
    # Mild overlap stays quiet.
    lex.set_geometry(b, rect=NormRect(0.3, 0.3, 0.4, 0.4))
    assert validate(lex, roles.board) == []


def test_multiple_imaginatives_warning(roles):
    lex, (s,) = _lex(roles)
    i1 = lex.create_imaginative(ImaginationLevel.SMALL, (0.5, 0.5))
    i2 = lex.create_imaginative(ImaginationLevel.LARGE, (0.6, 0.6))
    lex.link(i1, s)
    lex.link(i2, s)
    diags = validate(lex, roles.board)
    assert _codes(diags) == ["W004"]
    assert diags[0].ids == tuple(sorted([i1, i2]))


def test_multiple_background_imaginatives_warn(roles):
    lex, _ = _lex(roles)
    lex.create_imaginative(ImaginationLevel.SMALL, (0.5, 0.5))
    lex.create_imaginative(ImaginationLevel.MEDIUM, (0.6, 0.6))
    diags = validate(lex, roles.board)
    assert _codes(diags) == ["W004"]
    assert "background" in diags[0].message


def test_linked_style_warning(roles):
    lex, (s,) = _lex(roles)
    st = lex.place_copy(roles.board.get_token(roles.styles[0]), NormRect(0.7, 0.7, 0.1, 0.1))
    lex.link(st, s)
    assert _codes(validate(lex, roles.board)) == ["W005"]


def test_diagnostics_sorted_by_code_then_ids(roles):
    lex, ids = _lex(roles, n_subjects=7)
    lex.create_textual("#ghost", (0.5, 0.5))
    lex.place_copy(roles.board.get_token(roles.styles[0]), NormRect(0.7, 0.7, 0.1, 0.1))
    lex.place_copy(roles.board.get_token(roles.styles[1]), NormRect(0.85, 0.7, 0.1, 0.1))
    codes = _codes(validate(lex, roles.board))
    assert codes == sorted(codes)
    assert codes[0] == "E001"


# ---------------------------------------------------------------------------
# Compile gating
# ---------------------------------------------------------------------------


def test_compile_blocks_on_errors(roles):
    lex, _ = _lex(roles)
    lex.create_textual("#nobody", (0.5, 0.5))
    with pytest.raises(ValidationFailed) as err:
        compile_lexicon(lex, roles.board)
    assert any(d["code"] == "E001" for d in err.value.details["diagnostics"])


def test_strict_blocks_on_warnings(roles):
    lex, ids = _lex(roles, n_subjects=7)
    compile_lexicon(lex, roles.board)  # warnings pass in default mode
    with pytest.raises(StrictWarnings) as err:
        compile_lexicon(lex, roles.board, strict=True)
    assert any(d["code"] == "W001" for d in err.value.details["diagnostics"])


def test_strict_passes_when_clean(roles):
    lex, _ = _lex(roles)
    plan = compile_lexicon(lex, roles.board, strict=True)
    assert plan.stage_names() == ["layout"]


# ---------------------------------------------------------------------------
# Scope resolution and weights
# ---------------------------------------------------------------------------


def test_unlinked_color_is_global_linked_is_local(roles):
    lex, (s,) = _lex(roles)
    g = lex.place_copy(roles.board.get_token(roles.colors[0]), NormRect(0.7, 0.1, 0.1, 0.1))
    loc = lex.place_copy(roles.board.get_token(roles.colors[1]), NormRect(0.7, 0.3, 0.1, 0.1))
    lex.link(loc, s)
    plan = compile_lexicon(lex, roles.board)
    assert plan.stage_names() == ["layout", "global_color", "local_color"]
    local = plan.get_stage("local_color")
    assert len(local.entries) == 1
    assert local.entries[0].subject_instance_id == s
    assert local.entries[0].placement_index == 0
    global_hex = [c.to_hex() for c in plan.get_stage("global_color").palette.colors()]
    assert global_hex == [roles.board.get_token(roles.colors[0]).color.to_hex()]


def test_group_link_applies_all_members(roles):
    lex, (s,) = _lex(roles)
    c1 = lex.place_copy(roles.board.get_token(roles.colors[0]), NormRect(0.7, 0.1, 0.1, 0.1))
    c2 = lex.place_copy(roles.board.get_token(roles.colors[1]), NormRect(0.7, 0.3, 0.1, 0.1))
    t = lex.create_textual("spotted", (0.5, 0.5))
    gid = lex.group([c1, c2, t])
    lex.link(gid, s)
    plan = compile_lexicon(lex, roles.board)
    assert plan.stage_names() == ["layout", "local_color"]
    assert len(plan.get_stage("local_color").entries[0].palette) == 2
    assert plan.layout().placements[0].prompt == "spotted"
    assert plan.layout().background_prompt == ""


def test_textual_linked_to_two_subjects_applies_twice(roles):
    lex, (s1,) = _lex(roles)
    s2 = lex.place_copy(roles.board.get_token(roles.subjects[1]), NormRect(0.5, 0.5, 0.2, 0.2))
    t = lex.create_textual("weathered", (0.3, 0.3))
    lex.link(t, s1)
    lex.link(t, s2)
    plan = compile_lexicon(lex, roles.board)
    assert [p.prompt for p in plan.layout().placements] == ["weathered", "weathered"]


def test_color_weights_proportional_to_area(roles):
    lex, _ = _lex(roles)
    big = roles.board.get_token(roles.colors[0])
    small = roles.board.get_token(roles.colors[1])
    lex.place_copy(big, NormRect(0.1, 0.7, 0.2, 0.1))  # area 0.02
    lex.place_copy(small, NormRect(0.4, 0.7, 0.1, 0.1))  # area 0.01
    plan = compile_lexicon(lex, roles.board)
    doc = plan.get_stage("global_color").to_doc()
    weights = [e["weight"] for e in doc["palette"]]
    assert weights == [0.666667, 0.333333]
    assert sum(weights) == pytest.approx(1.0, abs=1e-9)


def test_style_entries_sorted_by_weight_then_token(roles):
    lex, _ = _lex(roles)
    lex.place_copy(roles.board.get_token(roles.styles[0]), NormRect(0.6, 0.6, 0.1, 0.1))
    lex.place_copy(roles.board.get_token(roles.styles[1]), NormRect(0.75, 0.6, 0.2, 0.2))
    plan = compile_lexicon(lex, roles.board)
    entries = plan.get_stage("style").entries
    assert entries[0][0] == roles.styles[1]  # larger area first
    assert entries[0][1] == pytest.approx(0.8)
    assert entries[1][1] == pytest.approx(0.2)


def test_equal_weight_styles_tie_break_on_token_id(roles):
    lex, _ = _lex(roles)
    lex.place_copy(roles.board.get_token(roles.styles[1]), NormRect(0.6, 0.6, 0.1, 0.1))
    lex.place_copy(roles.board.get_token(roles.styles[0]), NormRect(0.75, 0.6, 0.1, 0.1))
    plan = compile_lexicon(lex, roles.board)
    entries = plan.get_stage("style").entries
    assert [e[0] for e in entries] == sorted([roles.styles[0], roles.styles[1]])


# ---------------------------------------------------------------------------
# Prompts
# ---------------------------------------------------------------------------


def test_prompts_join_in_creation_order_with_refs_rewritten(roles):
    lex, (s,) = _lex(roles)
    lex.set_name(s, "hero")
    t1 = lex.create_textual("worn armor", (0.1, 0.1))
    t2 = lex.create_textual("standing by #hero", (0.2, 0.2))
    lex.link(t2, s)
    lex.link(t1, s)  # link order must not matter; creation order does
    plan = compile_lexicon(lex, roles.board)
    assert plan.layout().placements[0].prompt == "worn armor; standing by [subj:hero]"


def test_background_prompt_joins_unlinked_texts(roles):
    lex, _ = _lex(roles)
    lex.create_textual("dusk light", (0.1, 0.1))
    lex.create_textual("wet asphalt", (0.2, 0.2))
    plan = compile_lexicon(lex, roles.board)
    assert plan.layout().background_prompt == "dusk light; wet asphalt"


def test_imaginative_appends_directive_max_level_wins(roles):
    lex, (s,) = _lex(roles)
    t = lex.create_textual("mossy", (0.1, 0.1))
    lex.link(t, s)
    small = lex.create_imaginative(ImaginationLevel.SMALL, (0.3, 0.3))
    large = lex.create_imaginative(ImaginationLevel.LARGE, (0.4, 0.4))
    lex.link(small, s)
    lex.link(large, s)
    plan = compile_lexicon(lex, roles.board)
    assert plan.layout().placements[0].prompt == "mossy [imagine:large]"


def test_background_imaginative_alone_yields_bare_directive(roles):
    lex, _ = _lex(roles)
    lex.create_imaginative(ImaginationLevel.MEDIUM, (0.3, 0.3))
    plan = compile_lexicon(lex, roles.board)
    assert plan.layout().background_prompt == "[imagine:medium]"


def test_extend_prompt_passthrough_without_level():
    assert extend_prompt("plain", None) == "plain"
    assert extend_prompt("plain", ImaginationLevel.NONE) == "plain"
    assert DirectiveExtender().extend("x", ImaginationLevel.SMALL) == "x [imagine:small]"


def test_custom_extender_is_used(roles):
    class Loud:
        def extend(self, text, level):
            return f"{text}!!{level.value.upper()}"

    lex, (s,) = _lex(roles)
    i = lex.create_imaginative(ImaginationLevel.SMALL, (0.3, 0.3))
    lex.link(i, s)
    plan = compile_lexicon(lex, roles.board, extender=Loud())
    assert plan.layout().placements[0].prompt == "!!SMALL"


# ---------------------------------------------------------------------------
# Invariances
# ---------------------------------------------------------------------------


def test_moving_modifiers_never_changes_the_plan(roles):
    lex, (s,) = _lex(roles)
    c = lex.place_copy(roles.board.get_token(roles.colors[0]), NormRect(0.7, 0.1, 0.1, 0.1))
    t = lex.create_textual("calm", (0.5, 0.5))
    i = lex.create_imaginative(ImaginationLevel.SMALL, (0.6, 0.6))
    st = lex.place_copy(roles.board.get_token(roles.styles[0]), NormRect(0.8, 0.8, 0.1, 0.1))
    lex.link(t, s)
    before = compile_lexicon(lex, roles.board).canonical_bytes()
    for iid, pos in ((c, (0.05, 0.9)), (t, (0.9, 0.05)), (i, (0.0, 0.0)), (st, (0.4, 0.85))):
        lex.set_geometry(iid, pos=pos)
        assert compile_lexicon(lex, roles.board).canonical_bytes() == before


def test_doubling_subject_rect_doubles_bbox_sides(roles):
    lex = VisualLexicon("lex_0001")
    token = roles.board.get_token(roles.subjects[0])
    s = lex.place_copy(token, NormRect(0.1, 0.1, 0.2, 0.15))
    first = compile_lexicon(lex, roles.board).layout().placements[0].bbox
    lex.set_geometry(s, rect=NormRect(0.1, 0.1, 0.4, 0.3))
    second = compile_lexicon(lex, roles.board).layout().placements[0].bbox
    assert second.w == first.w * 2
    assert second.h == first.h * 2


def test_identical_documents_compile_byte_identical(roles):
    lex, (s,) = _lex(roles)
    lex.set_name(s, "hero")
    t = lex.create_textual("foggy #hero", (0.5, 0.5))
    lex.link(t, s)
    lex.place_copy(roles.board.get_token(roles.colors[2]), NormRect(0.8, 0.1, 0.1, 0.1))
    clone = VisualLexicon.from_doc(lex.to_doc())
    a = compile_lexicon(lex, roles.board)
    b = compile_lexicon(clone, roles.board)
    assert a.canonical_bytes() == b.canonical_bytes()
    assert a.plan_hash == b.plan_hash


# ---------------------------------------------------------------------------
# Plan document
# ---------------------------------------------------------------------------


def test_stage_omission_and_order(roles):
    lex, (s,) = _lex(roles)
    plan = compile_lexicon(lex, roles.board)
    assert plan.stage_names() == ["layout"]
    assert plan.check_order()

    lex.place_copy(roles.board.get_token(roles.styles[0]), NormRect(0.7, 0.7, 0.1, 0.1))
    assert compile_lexicon(lex, roles.board).stage_names() == ["layout", "style"]

    lex.place_copy(roles.board.get_token(roles.colors[0]), NormRect(0.1, 0.8, 0.1, 0.1))
    assert compile_lexicon(lex, roles.board).stage_names() == ["layout", "style", "global_color"]

    c = lex.place_copy(roles.board.get_token(roles.colors[1]), NormRect(0.3, 0.8, 0.1, 0.1))
    lex.link(c, s)
    plan = compile_lexicon(lex, roles.board)
    assert plan.stage_names() == ["layout", "style", "global_color", "local_color"]
    assert plan.check_order()


def test_misordered_plan_fails_check(roles):
    lex, _ = _lex(roles)
    lex.place_copy(roles.board.get_token(roles.styles[0]), NormRect(0.7, 0.7, 0.1, 0.1))
    plan = compile_lexicon(lex, roles.board)
    layout, style = plan.stages
    assert not ExecutionPlan(stages=(style, layout)).check_order()
    assert not ExecutionPlan(stages=(layout, style, style)).check_order()
    assert not ExecutionPlan(stages=(style,)).check_order()


def test_plan_doc_round_trip_verifies_hash(roles):
    lex, (s,) = _lex(roles)
    lex.set_name(s, "hero")
    lex.create_textual("night market", (0.5, 0.5))
    lex.place_copy(roles.board.get_token(roles.colors[0]), NormRect(0.1, 0.8, 0.1, 0.1))
    plan = compile_lexicon(lex, roles.board)
    doc = canon.loads(plan.canonical_bytes())

    again = ExecutionPlan.from_doc(doc)
    assert again.plan_hash == plan.plan_hash
    assert again.canonical_bytes() == plan.canonical_bytes()

    tampered = canon.loads(plan.canonical_bytes())
    tampered["stages"][0]["background_prompt"] = "altered"
    with pytest.raises(ValueError):
        ExecutionPlan.from_doc(tampered)
    relaxed = ExecutionPlan.from_doc(tampered, verify_hash=False)
    assert relaxed.layout().background_prompt == "altered"


def test_plan_hash_covers_stages_only_and_is_stable(roles):
    lex, _ = _lex(roles)
    plan = compile_lexicon(lex, roles.board)
    doc = plan.to_doc()
    assert doc["plan_hash"] == plan.plan_hash
    assert plan.plan_hash == canon.digest({"schema": "plan/1", "stages": doc["stages"]})


# ---------------------------------------------------------------------------
# Demo scene shape
# ---------------------------------------------------------------------------


def test_demo_scene_compiles_to_expected_shape(demo_scene):
    board, lex, roles = demo_scene
    plan = compile_lexicon(lex, board)
    assert plan.stage_names() == ["layout", "style", "global_color"]

    layout = plan.layout()
    assert [p.name for p in layout.placements] == ["owl", "car", "tree"]
    assert layout.placements[0].prompt == "standing behind [subj:car], facing left"
    assert layout.placements[2].prompt == "[imagine:large]"
    assert layout.background_prompt == "beautiful park"

    palette = plan.get_stage("global_color").palette
    assert [round(w, 6) for w in palette.weights()] == [0.5, 0.32, 0.18]
