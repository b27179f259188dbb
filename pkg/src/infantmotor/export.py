"""Readable text and Graphviz DOT renderings of fitted trees."""
from __future__ import annotations

import re
from typing import Union

from .core import Label
from .learners import Model, UnsupportedLearnerError
from .learners.tree import Leaf, Split, TreeNode

INDENT = "|   "


def tree_of(model: Union[Model, TreeNode], index: int = 0) -> TreeNode:
    """The root node of a decision tree model, or of tree ``index`` of a forest."""
    if isinstance(model, (Leaf, Split)):
        return model
    if model.family == "DecisionTree":
        return model.estimator.root
    if model.family == "RandomForest":
        return model.estimator.trees[index].root
    raise UnsupportedLearnerError(f"{model.family} models are not trees")


def _leaf_text(node: Leaf) -> str:
    return f"leaf: {node.label.name} (w={node.weight!r}; TD={node.td_weight!r}, AR={node.ar_weight!r})"


def to_text(node: TreeNode) -> str:
    lines = []

    def walk(n, level):
        pad = INDENT * level
        if isinstance(n, Leaf):
            lines.append(pad + _leaf_text(n))
            return
        lines.append(f"{pad}{n.feature} <= {n.threshold!r}")
        walk(n.left, level + 1)
        lines.append(f"{pad}{n.feature} > {n.threshold!r}")
        walk(n.right, level + 1)

    walk(node, 0)
    return "\n".join(lines) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(node: TreeNode, name: str = "tree") -> str:
    lines = [f"digraph {name} {{", "  node [shape=box];"]
    counter = [0]

    def walk(n):
        nid = f"n{counter[0]}"
        counter[0] += 1
        if isinstance(n, Leaf):
            label = f"{n.label.name} ({n.weight:.4g})"
            lines.append(f'  {nid} [label="{_dot_escape(label)}", shape=ellipse];')
            return nid
        lines.append(f'  {nid} [label="{_dot_escape(n.feature)}"];')
        left = walk(n.left)
        right = walk(n.right)
        lines.append(f'  {nid} -> {left} [label="<= {n.threshold:.6g}"];')
        lines.append(f'  {nid} -> {right} [label="> {n.threshold:.6g}"];')
        return nid

    walk(node)
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_tree(model: Union[Model, TreeNode], fmt: str = "text") -> str:
    root = tree_of(model)
    if fmt == "text":
        return to_text(root)
    if fmt == "dot":
        return to_dot(root)
    raise ValueError(f"unknown export format {fmt!r}; expected 'text' or 'dot'")


_LEAF = re.compile(r"^leaf: (TD|AR) \(w=([^;]+); TD=([^,]+), AR=([^)]+)\)$")
_SPLIT = re.compile(r"^(.+) (<=|>) (\S+)$")


def parse_text(text: str) -> TreeNode:
    """Inverse of ``to_text``."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    pos = [0]

    def level_of(line):
        n = 0
        while line.startswith(INDENT, n * len(INDENT)):
            n += 1
        return n, line[n * len(INDENT):]

    def parse(level):
        lvl, body = level_of(lines[pos[0]])
        if lvl != level:
            raise ValueError(f"bad indentation at line {pos[0] + 1}")
        m = _LEAF.match(body)
        if m:
            pos[0] += 1
            return Leaf(Label[m.group(1)], float(m.group(3)), float(m.group(4)))
        m = _SPLIT.match(body)
        if not m or m.group(2) != "<=":
            raise ValueError(f"expected a '<=' split at line {pos[0] + 1}")
        feature, threshold = m.group(1), float(m.group(3))
        pos[0] += 1
        left = parse(level + 1)
        lvl, body = level_of(lines[pos[0]])
        m = _SPLIT.match(body)
        if lvl != level or not m or m.group(1) != feature or m.group(2) != ">" or float(m.group(3)) != threshold:
            raise ValueError(f"expected the matching '>' branch at line {pos[0] + 1}")
        pos[0] += 1
        right = parse(level + 1)
        return Split(feature, threshold, left, right,
                     left.td_weight + right.td_weight, left.ar_weight + right.ar_weight)

    root = parse(0)
    if pos[0] != len(lines):
        raise ValueError("trailing lines after the tree")
    return root

