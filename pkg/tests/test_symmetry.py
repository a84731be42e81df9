import math

import numpy as np
import pytest

from hyperbolize import geometry as geo
from hyperbolize.geometry import (
    GeometryKind,
    Motion,
    euclidean_triangle,
    hyperbolic_triangle,
    point_at_distance,
)
from hyperbolize.symmetry import (
    ALL_SIGNATURES,
    FoldError,
    GroupWord,
    SignatureError,
    corresponding_word,
    euclidean_cell_for,
    euclidean_orders,
    locate,
    parse_signature,
    reflection_group,
    supergroup_reduction,
    validate_target,
)

ALIAS_PAIRS = [
    ("p1", "○"), ("pm", "**"), ("pg", "××"), ("cm", "*×"), ("p2", "2222"),
    ("pmm", "*2222"), ("pgg", "22×"), ("pmg", "22*"), ("cmm", "2*22"),
    ("p3", "333"), ("p3m1", "*333"), ("p31m", "3*3"), ("p4", "442"),
    ("p4m", "*442"), ("p4g", "4*2"), ("p6", "632"), ("p6m", "*632"),
]


def test_seventeen_signatures():
    assert len(ALL_SIGNATURES) == 17
    assert len({s.name for s in ALL_SIGNATURES}) == 17


@pytest.mark.parametrize("alias,orbifold", ALIAS_PAIRS)
def test_parse_aliases(alias, orbifold):
    assert parse_signature(alias).name == orbifold
    assert parse_signature(alias.upper()).name == orbifold
    assert parse_signature(orbifold).name == orbifold


def test_parse_ascii_variants():
    assert parse_signature("22x").name == "22×"
    assert parse_signature("o").name == "○"
    assert parse_signature("*x").name == "*×"


def test_parse_rejects_unknown():
    for bad in ("p7", "*5222", "", "437"):
        with pytest.raises(SignatureError, match="not a wallpaper signature"):
            parse_signature(bad)


# ---------------------------------------------------------------------------
# reflection groups


def motion_is_identity(m: Motion, pts=(0.31 + 0.17j, -0.2 + 0.05j, 0.1 - 0.4j), tol=1e-8):
    return all(abs(m.apply(z) - z) < tol for z in pts)


@pytest.mark.parametrize("cell_fn", [
    lambda: euclidean_triangle(3, 3, 3),
    lambda: euclidean_triangle(4, 4, 2),
    lambda: hyperbolic_triangle(4, 3, 3),
    lambda: hyperbolic_triangle(5, 4, 3),
])
def test_generators_are_involutions_and_fix_edges(cell_fn):
    cell = cell_fn()
    group = reflection_group(cell)
    for i, gen in enumerate(group.generators):
        assert gen.conjugating
        assert motion_is_identity(gen.compose(gen), tol=1e-10)
        edge = cell.edges[i]
        va, vb = cell.vertices[i], cell.vertices[(i + 1) % cell.size]
        for t in np.linspace(0.05, 0.95, 10):
            if isinstance(edge, geo.Line):
                pt = va + t * (vb - va)
            else:
                ta = math.atan2((va - edge.center).imag, (va - edge.center).real)
                tb = math.atan2((vb - edge.center).imag, (vb - edge.center).real)
                span = (tb - ta + math.pi) % (2 * math.pi) - math.pi
                pt = edge.center + edge.radius * np.exp(1j * (ta + t * span))
            assert abs(gen.apply(pt) - pt) < 1e-10


@pytest.mark.parametrize("orders,make", [
    ((3, 3, 3), lambda: euclidean_triangle(3, 3, 3)),
    ((4, 3, 3), lambda: hyperbolic_triangle(4, 3, 3)),
])
def test_adjacent_generator_products_have_corner_orders(orders, make):
    cell = make()
    group = reflection_group(cell)
    n = cell.size
    for i in range(n):
        j = (i + 1) % n
        order = cell.corner_orders[j]  # corner shared by edges i and j
        prod = group.generators[i].compose(group.generators[j])
        acc = Motion.identity()
        for _ in range(order):
            acc = acc.compose(prod)
        assert motion_is_identity(acc, tol=1e-8)


# ---------------------------------------------------------------------------
# locate / corresponding_word


def test_locate_interior_empty_word():
    group = reflection_group(hyperbolic_triangle(4, 3, 3))
    z = 0.15 + 0.08j
    assert group.cell.contains(z)
    word, folded = locate(group, z)
    assert len(word) == 0
    assert folded == z


def test_locate_single_reflection():
    group = reflection_group(hyperbolic_triangle(4, 3, 3))
    z0 = 0.15 + 0.08j
    mirrored = group.cell.edges[0].reflect(z0)
    word, folded = locate(group, mirrored)
    assert word.labels == ("e0",)
    assert abs(folded - z0) < 1e-12


def test_locate_near_corner_alternates_two_labels():
    cell = hyperbolic_triangle(4, 3, 3)
    group = reflection_group(cell)
    # corner of order 4 at the origin, between edges e0 and e2
    z = 0.03 * np.exp(1j * math.radians(-130.0))
    word, folded = locate(group, complex(z))
    assert 1 <= len(word) <= 4
    assert set(word.labels) <= {"e0", "e2"}
    assert group.cell.contains(folded, tol=1e-9)


def test_locate_word_cap():
    group = reflection_group(hyperbolic_triangle(4, 3, 3))
    deep = 0.999 * np.exp(2.1j)
    with pytest.raises(FoldError, match="word length exceeded"):
        locate(group, complex(deep), max_len=2)


def test_locate_roundtrip_consistency():
    cell = hyperbolic_triangle(4, 3, 3)
    group = reflection_group(cell)
    rng = np.random.default_rng(21)
    for _ in range(200):
        z0 = complex(rng.uniform(0.03, 0.25), rng.uniform(0.02, 0.15))
        if not cell.contains(z0):
            continue
        w = z0
        for k in rng.integers(0, 3, size=int(rng.integers(1, 7))):
            w = group.generators[int(k)].apply(w)
        word, folded = locate(group, w)
        motion = corresponding_word(word, group)
        assert abs(motion.apply(w) - folded) < 1e-9
        assert abs(motion.inverse().apply(folded) - w) < 1e-9


def test_locate_tiles_disk_of_hyperbolic_radius_three():
    cell = hyperbolic_triangle(4, 3, 3)
    group = reflection_group(cell)
    rng = np.random.default_rng(22)
    r_euc = math.tanh(3.0 / 2.0)
    # bulk check through the vectorized fold, spot checks through locate
    from hyperbolize.renderer import fold_disk_points

    zs = r_euc * np.sqrt(rng.uniform(0, 1, 10_000)) * np.exp(
        2j * math.pi * rng.uniform(0, 1, 10_000)
    )
    folded, length, ok, *_ = fold_disk_points(group, zs, max_len=64)
    assert ok.all()
    assert cell.contains(folded, tol=1e-9).all()
    for z in zs[:300]:
        word, fz = locate(group, complex(z), max_len=64)
        assert cell.contains(fz, tol=1e-9)
        assert len(word) <= 64


def test_corresponding_word_empty_is_identity():
    group = reflection_group(euclidean_triangle(3, 3, 3))
    assert motion_is_identity(corresponding_word(GroupWord(()), group))


def test_corresponding_word_single_label():
    group = reflection_group(euclidean_triangle(3, 3, 3))
    m = corresponding_word(GroupWord(("e1",)), group)
    assert m.conjugating
    z = 0.3 + 0.3j
    assert abs(m.apply(z) - group.generators[1].apply(z)) < 1e-12


def test_corresponding_word_two_labels_is_rotation():
    cell = euclidean_triangle(3, 3, 3)
    group = reflection_group(cell)
    m = corresponding_word(GroupWord(("e0", "e1")), group)
    assert not m.conjugating
    shared = cell.vertices[1]  # corner between edges e0 and e1
    assert abs(m.apply(shared) - shared) < 1e-10


def test_corresponding_word_label_mismatch():
    group = reflection_group(euclidean_triangle(3, 3, 3))
    with pytest.raises(SignatureError, match="label mismatch"):
        corresponding_word(GroupWord(("e7",)), group)


def test_word_transfer_between_groups():
    cell_h = hyperbolic_triangle(4, 3, 3)
    cell_e = euclidean_triangle(3, 3, 3)
    gh, ge = reflection_group(cell_h), reflection_group(cell_e)
    z = point_at_distance(0.1 + 0.1j, 0.7, 1.4)
    word, folded = locate(gh, z)
    m_e = corresponding_word(word, ge)
    assert m_e.conjugating == (len(word) % 2 == 1)


# ---------------------------------------------------------------------------
# supergroup reduction


def test_supergroup_table():
    expected = {
        "333": ("*333", 2), "442": ("*442", 2), "632": ("*632", 2),
        "3*3": ("*333", 2), "4*2": ("*442", 2),
        "**": ("*2222", 2), "*×": ("*2222", 2), "××": ("*2222", 2),
        "2*22": ("*2222", 2), "22*": ("*2222", 2), "22×": ("*2222", 2),
        "*333": ("*333", 1), "*442": ("*442", 1), "*632": ("*632", 1),
        "*2222": ("*2222", 1),
    }
    for name, (sup, index) in expected.items():
        red = supergroup_reduction(name)
        assert red.supergroup_signature.name == sup
        assert red.index == index


def test_supergroup_refuses_translation_groups():
    for name in ("2222", "○"):
        with pytest.raises(SignatureError, match="two-parameter adjustment"):
            supergroup_reduction(name)


def test_supergroup_rectangular_assertion():
    red = supergroup_reduction("2222", rectangular_cell=True)
    assert red.supergroup_signature.name == "*2222"
    assert red.index == 2
    red_o = supergroup_reduction("○", rectangular_cell=True)
    assert red_o.supergroup_signature.name == "*2222"


def test_supergroup_totality_fifteen_of_seventeen():
    failures = []
    for sig in ALL_SIGNATURES:
        try:
            supergroup_reduction(sig)
        except SignatureError:
            failures.append(sig.name)
    assert sorted(failures) == sorted(["2222", "○"])


# ---------------------------------------------------------------------------
# target validation


def test_validate_target_accepts_hyperbolic():
    assert validate_target("*333", (4, 3, 3)) is GeometryKind.HYPERBOLIC
    assert validate_target("*333", (5, 4, 3)) is GeometryKind.HYPERBOLIC
    assert validate_target("p6m", (7, 3, 2)) is GeometryKind.HYPERBOLIC
    assert validate_target("pmm", (3, 2, 3, 2)) is GeometryKind.HYPERBOLIC


def test_validate_target_rejects_euclidean():
    with pytest.raises(SignatureError, match="target not hyperbolic"):
        validate_target("*442", (4, 4, 2))


def test_validate_target_arity():
    with pytest.raises(SignatureError, match="corner orders"):
        validate_target("*333", (4, 3, 3, 3))


def test_validate_target_low_order():
    with pytest.raises(SignatureError, match="at least 2"):
        validate_target("*333", (4, 3, 1))


def test_euclidean_cells_for_supergroups():
    assert euclidean_orders("*632") == (6, 3, 2)
    cell = euclidean_cell_for("*442")
    assert cell.corner_orders == (4, 4, 2)
    rect = euclidean_cell_for("*2222", aspect=2.0)
    assert rect.size == 4
