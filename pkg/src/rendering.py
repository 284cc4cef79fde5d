"""
Rendering Module for the Music Dependency Parser
Graphviz DOT text for dependency and constituent trees
"""

from typing import List, Optional, Sequence, Union

from .config import NONE, ROOT
from .trees import ConstituentTree, DependencyTree, Internal, Leaf, Side, head_element, iter_leaves


def _quote(text: str) -> str:
    return '"' + str(text).replace('\\', '\\\\').replace('"', '\\"') + '"'


def _labels(n: int, labels: Optional[Sequence[str]]) -> List[str]:
    if labels is None:
        return [str(i) for i in range(n)]
    if len(labels) != n:
        raise ValueError(f"{len(labels)} labels for {n} elements")
    return [str(label) for label in labels]


def render_dependency(t: DependencyTree, labels: Optional[Sequence[str]] = None) -> str:
    """Edges point from dependent to head; the root is drawn with a double border"""
    names = _labels(t.seq_len, labels)
    lines = ['digraph dependency {', '  rankdir=LR;', '  node [shape=box];']
    for i, name in enumerate(names):
        attrs = [f'label={_quote(name)}']
        if t.heads[i] == ROOT:
            attrs.append('peripheries=2')
        elif t.heads[i] == NONE:
            attrs.append('style=dashed')
        lines.append(f"  n{i} [{', '.join(attrs)}];")
    for dep, head in enumerate(t.heads):
        if head >= 0:
            lines.append(f'  n{dep} -> n{head};')
    lines.append('}')
    return '\n'.join(lines) + '\n'


def render_constituent(c: ConstituentTree, labels: Optional[Sequence[str]] = None) -> str:
    """Parent-to-child edges; primary children solid, secondary children dashed"""
    names = _labels(len(iter_leaves(c)), labels)
    lines = ['digraph constituent {', '  node [shape=box];']
    for i, name in enumerate(names):
        lines.append(f'  l{i} [label={_quote(name)}];')

    edges: List[str] = []
    counter = [0]

    def visit(node: ConstituentTree) -> str:
        if isinstance(node, Leaf):
            return f'l{node.element_index}'
        node_id = f'c{counter[0]}'
        counter[0] += 1
        lines.append(f'  {node_id} [label={_quote(names[head_element(node)])}, shape=ellipse];')
        left_id, right_id = visit(node.left), visit(node.right)
        left_style, right_style = ('dashed', 'solid') if node.primary == Side.RIGHT else ('solid', 'dashed')
        edges.append(f'  {node_id} -> {left_id} [style={left_style}];')
        edges.append(f'  {node_id} -> {right_id} [style={right_style}];')
        return node_id

    visit(c)
    lines.extend(edges)
    lines.append('}')
    return '\n'.join(lines) + '\n'


def render_dot(tree: Union[DependencyTree, ConstituentTree], labels: Optional[Sequence[str]] = None) -> str:
    if isinstance(tree, DependencyTree):
        return render_dependency(tree, labels)
    if isinstance(tree, (Leaf, Internal)):
        return render_constituent(tree, labels)
    raise TypeError(f"cannot render {type(tree).__name__}")


def event_labels(events) -> List[str]:
    """Display label per event: chord symbol, MIDI pitch, or 'rest'"""
    labels = []
    for e in events:
        if hasattr(e, 'symbol'):
            labels.append(e.symbol)
        else:
            labels.append('rest' if e.is_rest else str(e.pitch))
    return labels
