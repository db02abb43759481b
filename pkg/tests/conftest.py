import os
import sys
from pathlib import Path

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from hiereval.hierarchy import Hierarchy  # noqa: E402
from hiereval.labels import InstanceLabels  # noqa: E402

settings.register_profile("default", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("quick", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def hierarchies(draw, min_nodes=2, max_nodes=12, shape="dag", weighted=False):
    """Random rooted tree, DAG or forest with shuffled integer ids.

    ``shape`` is ``tree``, ``dag``, ``forest`` or ``any``.  Nodes are created
    in topological order, so every generated graph is acyclic.
    """
    if shape == "any":
        shape = draw(st.sampled_from(["tree", "dag", "forest"]))
    n = draw(st.integers(min_nodes, max_nodes))
    ids = draw(st.permutations(range(100, 100 + 3 * n)))[:n]
    edges = []
    for i in range(1, n):
        if shape == "forest" and draw(st.integers(0, 4)) == 0:
            continue
        parent = draw(st.integers(0, i - 1))
        w = draw(st.sampled_from([1.0, 2.0, 0.5])) if weighted else 1.0
        edges.append((ids[parent], ids[i], w))
        if shape == "dag" and i > 1 and draw(st.integers(0, 2)) == 0:
            extra = draw(st.integers(0, i - 1))
            if extra != parent:
                edges.append((ids[extra], ids[i], w))
    return Hierarchy(edges, nodes=ids)


@st.composite
def instances(draw, h: Hierarchy, max_labels=3, allow_empty_pred=False):
    nodes = sorted(h.nodes)
    truth = draw(st.sets(st.sampled_from(nodes), min_size=1, max_size=max_labels))
    pred = draw(st.sets(st.sampled_from(nodes), min_size=0 if allow_empty_pred else 1,
                        max_size=max_labels))
    return InstanceLabels(truth, pred)


@st.composite
def hierarchy_and_instance(draw, shape="any", max_nodes=12, max_labels=3):
    h = draw(hierarchies(shape=shape, max_nodes=max_nodes))
    return h, draw(instances(h, max_labels))


def relabel(h: Hierarchy, labels: InstanceLabels, mapping: dict):
    h2 = Hierarchy([(mapping[p], mapping[c], w) for p, c, w in h.edges],
                   nodes=[mapping[n] for n in h.nodes])
    lab2 = InstanceLabels({mapping[n] for n in labels.truth},
                          {mapping[n] for n in labels.predicted})
    return h2, lab2


def pytest_terminal_summary(terminalreporter):
    from verdicts import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(RESULTS):
        ok, detail = RESULTS[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
