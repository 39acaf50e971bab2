import math
from functools import lru_cache

import numpy as np
import pytest

from corpus_ingest import CorpusFacts, UnitFacts
from errors import TreeMetricError
from tree_metrics import (
    FORBIDDEN_COST,
    LabeledTree,
    apply_thresholds,
    authoritative_tree,
    package_groups,
    parse_newick,
    path_difference,
    read_newick,
    ted,
    to_newick,
    tree_from_groups,
    write_newick,
)


def leaf(label: str) -> LabeledTree:
    return LabeledTree(label)


def node(*children: LabeledTree, label: str = "") -> LabeledTree:
    return LabeledTree(label, tuple(children))


def _cost(a: LabeledTree, b: LabeledTree) -> int:
    if a.label == b.label or (a.children and b.children):
        return 0
    return FORBIDDEN_COST


def _size(forest) -> int:
    return sum(t.size() for t in forest)


@lru_cache(maxsize=None)
def _forest_distance(f: tuple, g: tuple) -> int:
    """Distance d'édition de forêts ordonnées, récurrence sur les racines les plus à droite."""
    if not f:
        return _size(g)
    if not g:
        return _size(f)
    v, w = f[-1], g[-1]
    return min(
        _forest_distance(f[:-1] + v.children, g) + 1,
        _forest_distance(f, g[:-1] + w.children) + 1,
        _forest_distance(f[:-1], g[:-1]) + _forest_distance(v.children, w.children) + _cost(v, w),
    )


def _random_tree(rng, max_nodes: int, pool: list[str]) -> LabeledTree:
    n = int(rng.integers(1, max_nodes + 1))
    parents = [None] + [int(rng.integers(0, i)) for i in range(1, n)]
    children: dict[int, list[int]] = {i: [] for i in range(n)}
    for i, parent in enumerate(parents[1:], start=1):
        children[parent].append(i)
    labels = iter(rng.permutation(pool).tolist())

    def build(i: int) -> LabeledTree:
        if not children[i]:
            return LabeledTree(next(labels))
        return LabeledTree(str(rng.choice(["", "p", "q"])), tuple(build(c) for c in children[i]))

    return build(0)


def _facts(sizes: dict[str, int]) -> CorpusFacts:
    units = []
    for package, size in sizes.items():
        for i in range(size):
            units.append(UnitFacts(f"{package}.M{i:02d}", (package,)))
    return CorpusFacts(tuple(units))


class TestLabeledTree:
    def test_canonical_orders_by_smallest_leaf(self):
        tree = node(node(leaf("d"), leaf("c")), node(leaf("b"), leaf("a")))
        assert to_newick(tree.canonical()) == "((a,b),(c,d));"

    def test_restrict_splices_unary_nodes(self):
        tree = node(node(leaf("a"), leaf("b")), node(leaf("c"), leaf("d")))
        restricted = tree.restrict({"a", "c", "d"})
        assert to_newick(restricted) == "(a,(c,d));"
        assert tree.restrict({"z"}) is None

    def test_restrict_keeps_original_unary_nodes(self):
        tree = node(node(node(leaf("a"), leaf("b"), label="inner"), label="outer"))
        assert tree.restrict({"a", "b"}) == tree

    def test_duplicate_leaves(self):
        with pytest.raises(TreeMetricError):
            node(leaf("a"), leaf("a")).check_unique_leaves()

    def test_size_and_leaves(self):
        tree = node(node(leaf("a"), leaf("b")), leaf("c"))
        assert tree.size() == 5
        assert tree.leaves() == ["a", "b", "c"]
        assert tree.min_leaf == "a"


class TestAuthoritativeTree:
    def test_thresholds(self):
        facts = _facts({"small": 3, "mid": 10, "big": 50})
        groups = apply_thresholds(package_groups(facts), 5, 40)
        assert sorted(groups) == [("big", "part1"), ("big", "part2"), ("mid",)]
        assert len(groups[("big", "part1")]) == 25
        assert len(groups[("big", "part2")]) == 25
        assert groups[("big", "part1")][0] == "big.M00"
        tree = authoritative_tree(facts, 5, 40)
        assert len(tree.leaves()) == 60
        assert "small.M00" not in tree.leaves()

    def test_package_taxonomy_is_kept(self):
        tree = tree_from_groups({("shop", "billing"): ["b1", "b2"], ("shop", "users"): ["u1"]})
        assert to_newick(tree) == "(((b1,b2)billing,(u1)users)shop);"

    def test_uneven_split(self):
        groups = apply_thresholds({("p",): [f"m{i}" for i in range(7)]}, 1, 3)
        assert [len(groups[("p", f"part{i}")]) for i in (1, 2, 3)] == [3, 2, 2]

    def test_errors(self):
        with pytest.raises(TreeMetricError):
            authoritative_tree(CorpusFacts())
        with pytest.raises(TreeMetricError):
            authoritative_tree(_facts({"tiny": 2}), 5, 40)
        with pytest.raises(TreeMetricError):
            apply_thresholds({}, 0, 3)


class TestTreeEditDistance:
    def test_identical(self):
        tree = node(node(leaf("a"), leaf("b")), leaf("c"))
        assert ted(tree, tree) == 0

    def test_insert_internal_node(self):
        star = node(leaf("a"), leaf("b"), leaf("c"))
        cherry = node(node(leaf("a"), leaf("b")), leaf("c"))
        assert ted(star, cherry) == 1
        assert ted(cherry, star) == 1

    def test_extra_leaf_under_root(self):
        tree = node(node(leaf("a"), leaf("b")), leaf("c"))
        assert ted(tree, node(*tree.children, leaf("d"))) == 1

    def test_internal_labels_are_free(self):
        t1 = node(node(leaf("a"), leaf("b"), label="x"), leaf("c"))
        t2 = node(node(leaf("a"), leaf("b"), label="y"), leaf("c"))
        assert ted(t1, t2) == 0

    def test_child_order_is_canonical(self):
        t1 = node(leaf("b"), node(leaf("c"), leaf("a")))
        t2 = node(node(leaf("a"), leaf("c")), leaf("b"))
        assert ted(t1, t2) == 0

    def test_against_forest_recursion(self):
        rng = np.random.default_rng(42)
        pool = [f"l{i}" for i in range(8)]
        for _ in range(200):
            t1 = _random_tree(rng, 6, pool).canonical()
            t2 = _random_tree(rng, 6, pool).canonical()
            assert ted(t1, t2) == _forest_distance((t1,), (t2,))


class TestPathDifference:
    def test_cherry_against_caterpillar(self):
        cherry = node(leaf("a"), leaf("b"))
        caterpillar = node(leaf("a"), node(leaf("b"), label="x"))
        assert path_difference(cherry, caterpillar) == 1

    def test_cherry_against_other_cherry(self):
        t1 = node(node(leaf("a"), leaf("b")), leaf("c"))
        t2 = node(leaf("a"), node(leaf("b"), leaf("c")))
        assert path_difference(t1, t2) == 2
        assert path_difference(t1, t2, take_sqrt=True) == pytest.approx(math.sqrt(2))

    def test_edge_count_offset_cancels(self):
        t1 = node(node(leaf("a"), leaf("b")), node(leaf("c"), leaf("d")))
        t2 = node(node(node(leaf("a"), leaf("b")), leaf("c")), leaf("d"))
        assert path_difference(t1, t2) == 3
        assert path_difference(t1, t2, count_edges=True) == 3

    def test_identical_and_symmetric(self):
        t1 = node(node(leaf("a"), leaf("b")), leaf("c"), leaf("d"))
        t2 = node(leaf("a"), node(leaf("b"), leaf("c"), leaf("d")))
        assert path_difference(t1, t1) == 0
        assert path_difference(t1, t2) == path_difference(t2, t1)

    def test_leaf_mismatch(self):
        with pytest.raises(TreeMetricError):
            path_difference(node(leaf("a"), leaf("b")), node(leaf("a"), leaf("c")))


class TestNewick:
    def test_parse(self):
        tree = parse_newick("((a:1,b:2.5)x:3,'c d');")
        assert tree.leaves() == ["a", "b", "c d"]
        assert tree.children[0].label == "x"
        assert tree.children[0].length == 3.0
        assert tree.children[0].children[1].length == 2.5

    def test_roundtrip_text(self):
        text = "((a:1,b:2.5)x:3,'c d','it''s');"
        assert to_newick(parse_newick(text)) == text

    @pytest.mark.parametrize("text", ["((a,b);", "(a,b)", "(a:x,b);", "(a,b);c"])
    def test_malformed(self, text):
        with pytest.raises(TreeMetricError):
            parse_newick(text)

    def test_file(self, tmp_path):
        tree = node(node(leaf("a"), leaf("b")), leaf("c"))
        path = write_newick(tree, tmp_path / "trees" / "t.nwk")
        assert read_newick(path) == tree
