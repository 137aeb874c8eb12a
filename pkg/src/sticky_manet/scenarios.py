"""Built-in scenario files and the random scenario generator for fuzzing."""

import random

FIG5 = """\
# six nodes in three groups; only group 1 may receive node 0's message.
# coordinates are pinned: 0 sees 1 and 2; 2 bridges to 4; 4 sees 3 and 5;
# 5 hangs off 4 alone. 1 (group 2) and 3 (group 3) must stay dark.
radio 2000000 300000000 0
node 0 1 0 0 250
node 1 2 0 200 250
node 2 1 200 0 250
node 3 3 400 200 250
node 4 1 400 0 250
node 5 1 600 0 250
policy 0 permit 1
originate 0 0.0 256
end 1.0
"""

SCENARIO3NODE = """\
# three nodes in a line; 0 and 1 share group 1, 2 sits in group 3.
# 1 may receive but must forward to nobody: 2 fails the group check and
# 0 is the originator.
radio 2000000 300000000 0
node 0 1 0 0 250
node 1 1 200 0 250
node 2 3 400 0 250
policy 0 permit 1
originate 0 0.0 64
end 1.0
"""

BUILTIN_NAMES = ("fig5", "scenario3node", "delay_sweep")

_SWEEP_HOP_SPACING = 200.0
_SWEEP_RANGE = 250.0


def build_fig5() -> str:
    return FIG5


def build_scenario3node() -> str:
    return SCENARIO3NODE


def build_delay_sweep() -> dict:
    """Eight scenario files: 1..4 concurrent flows, each with and without
    policies attached.

    Flow i runs over its own isolated chain of i hops. Node ids decrease
    toward the sink so that, with destinations visited in ascending id
    order, the forward-progress transmission always precedes the duplicate
    back-sends; the two variants then differ only by the policy block bytes
    on every hop.
    """
    files = {}
    for n_flows in (1, 2, 3, 4):
        for policied in (True, False):
            kind = "policied" if policied else "plain"
            lines = [
                f"# delay sweep: {n_flows} flow(s), {kind} frames.",
                "# flow i is an isolated chain of i hops; ids descend toward the sink.",
                "radio 2000000 300000000 0",
            ]
            for i in range(1, n_flows + 1):
                base = 10 * i
                for j in range(i + 1):
                    nid = base + (i - j)
                    x = _SWEEP_HOP_SPACING * j
                    y = 100000.0 * i
                    lines.append(f"node {nid} 1 {x:g} {y:g} {_SWEEP_RANGE:g}")
                lines.append(f"policy {base + i} permit 1")
                lines.append(f"cbr {base + i} {base} 512 0.1 0.0 1.0 {kind}")
            lines.append("end 2.0")
            files[f"sweep_{n_flows}_{kind}.scn"] = "\n".join(lines) + "\n"
    return files


def build_builtin(name: str):
    """Return the file content(s) for a built-in scenario name.

    fig5 and scenario3node yield a single file's text; delay_sweep yields a
    dict of file name to text.
    """
    if name == "fig5":
        return build_fig5()
    if name == "scenario3node":
        return build_scenario3node()
    if name == "delay_sweep":
        return build_delay_sweep()
    raise KeyError(name)


def random_scenario(rng: random.Random, max_nodes: int) -> str:
    """One random static scenario as file text.

    Topology, groups, ranges and traffic are drawn from the rng; no end
    directive is emitted so every flood runs to completion and the delivery
    sets stay comparable with the reachability oracle.
    """
    n = rng.randint(1, max_nodes)
    lines = ["# randomly generated scenario"]
    bandwidth = rng.choice((1_000_000, 2_000_000))
    processing = rng.choice((0.0, 0.0001))
    lines.append(f"radio {bandwidth} 300000000 {processing:g}")
    for nid in range(n):
        group = rng.randint(1, 5)
        x = rng.uniform(0.0, 1000.0)
        y = rng.uniform(0.0, 1000.0)
        reach = rng.uniform(50.0, 400.0)
        lines.append(f"node {nid} {group} {x:.3f} {y:.3f} {reach:.3f}")
    sources = sorted({rng.randrange(n) for _ in range(rng.randint(1, 3))})
    for src in sources:
        permitted = sorted(g for g in range(1, 6) if rng.random() < 0.5)
        groups = ",".join(str(g) for g in permitted) if permitted else ""
        if groups:
            lines.append(f"policy {src} permit {groups}")
        lines.append(f"originate {src} {rng.choice((0.0, 0.05, 0.1)):g} {rng.choice((16, 64, 256))}")
    if n >= 2 and rng.random() < 0.5:
        src = rng.randrange(n)
        dst = rng.randrange(n)
        while dst == src:
            dst = rng.randrange(n)
        kind = rng.choice(("policied", "plain"))
        lines.append(f"cbr {src} {dst} 128 0.05 0.0 0.1 {kind}")
    return "\n".join(lines) + "\n"
