"""Regenerate the synthetic fixtures shipped under src/fmea_rag/data/.

Outputs are deterministic; re-running must be a no-op diff. The script
also replays the evaluation harness on the generated fixtures and
prints the per-pipeline means so fixture tuning stays honest.

Run from the repository root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from fmea_rag import (  # noqa: E402
    EvalSettings,
    HashingEmbedder,
    load_validation_dataset,
    parse_fmea_table,
    run_eval,
    run_query,
    transpose,
)
from fmea_rag.evaluation import render_report  # noqa: E402
from fmea_rag.llm import ScriptedLlm  # noqa: E402

DATA = ROOT / "src" / "fmea_rag" / "data"

HEADER = [
    "process_step",
    "failure_mode",
    "failure_effect",
    "severity",
    "failure_cause",
    "occurrence",
    "failure_measure",
    "detection",
    "rpn",
]


def write_csv(path: Path, rows: list[list]) -> None:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(HEADER)
    writer.writerows(rows)
    path.write_text(out.getvalue(), encoding="utf-8")


# -- fixture 1: severity screen (exactly 14 effects rated above 5) -------

def severity_screen_rows() -> list[list]:
    # (effect, S) pools: 14 high-severity, 6 low-severity, all distinct.
    high = [
        ("Solder bridge between adjacent pads", 9),
        ("Open joint on fine pitch connector", 8),
        ("Tombstoned chip component", 7),
        ("Lifted pad on power rail", 9),
        ("Cracked ceramic capacitor body", 8),
        ("Insufficient fillet on anchor pin", 6),
        ("Board flex fracture near mouse bites", 7),
        ("Corrosion path under residue film", 8),
        ("Dendrite growth across traces", 9),
        ("Intermittent contact at test points", 6),
        ("Overheated laminate discoloration", 7),
        ("Delaminated coating over crystal", 6),
        ("Blocked via in thermal relief", 7),
        ("Shorted connector shielding wall", 8),
    ]
    low = [
        ("Cosmetic flux stain on silkscreen", 2),
        ("Slight skew of passive component", 3),
        ("Extra solder ball captured in coating", 4),
        ("Faint scratch on solder mask", 2),
        ("Minor label misprint", 3),
        ("Dull joint surface finish", 5),
    ]
    steps = [
        "Solder paste printing",
        "Pick and place",
        "Reflow soldering",
        "Conformal coating",
        "Final inspection",
    ]
    modes = [
        "Smeared paste deposit",
        "Clogged stencil aperture",
        "Nozzle vacuum loss",
        "Feeder misalignment",
        "Reflow profile drift",
        "Cold solder zone",
        "Coating nozzle sputter",
        "Masking tape residue",
        "Camera calibration drift",
        "Probe wear at fixture",
        "Paste viscosity shift",
        "Component tray swap error",
        "Conveyor speed surge",
        "Flux starvation pocket",
        "Cure lamp degradation",
        "Humidity excursion in storage",
        "Squeegee pressure fault",
        "Placement force spike",
        "Oxide layer on terminals",
        "Static discharge at handling",
    ]
    causes = [
        ("Worn squeegee blade edge", 3),
        ("Stencil underside buildup", 2),
        ("Blocked vacuum filter", 3),
        ("Loose feeder latch", 2),
        ("Thermocouple drift in zone four", 2),
        ("Depleted nitrogen supply", 3),
        ("Partially clogged spray tip", 2),
        ("Expired masking tape roll", 3),
        ("Vibration from adjacent press", 2),
        ("Probe tip contamination", 3),
        ("Cold storage fluctuation", 2),
        ("Operator tray mix up", 2),
        ("Encoder wheel slip", 3),
        ("Flux pump air ingress", 2),
        ("Aged ultraviolet bulb", 3),
        ("Door seal leakage", 2),
        ("Pressure regulator creep", 3),
        ("Worn placement spring", 2),
        ("Uncoated terminal batch", 3),
        ("Missing wrist strap check", 2),
    ]
    measures = [
        ("Blade replacement schedule", 1),
        ("Underside wipe cycle", 2),
        ("Filter swap at shift start", 1),
        ("Latch torque audit", 2),
        ("Zone profile verification", 3),
        ("Nitrogen purity monitor", 2),
        ("Tip flush routine", 1),
        ("Tape stock rotation", 2),
        ("Isolation mount inspection", 3),
        ("Probe clean and recheck", 1),
        ("Storage logger review", 2),
        ("Tray barcode scan", 1),
        ("Encoder recalibration", 3),
        ("Pump bleed procedure", 2),
        ("Bulb intensity check", 1),
        ("Seal replacement plan", 2),
        ("Regulator bench test", 3),
        ("Spring force measurement", 1),
        ("Terminal batch audit", 2),
        ("Strap verification gate", 1),
    ]
    effects = high + low
    rows = []
    for i in range(20):
        effect, severity = effects[i]
        cause, occurrence = causes[i]
        measure, detection = measures[i]
        rpn = severity * occurrence * detection
        # The screen question's answer is fourteen; that numeral must not
        # leak into any chunk, so no cell or rating may contain "14".
        if "14" in str(rpn):
            detection = detection + 1
            rpn = severity * occurrence * detection
        assert "14" not in str(rpn), (effect, rpn)
        rows.append(
            [steps[i % len(steps)], modes[i], effect, severity, cause, occurrence, measure, detection, rpn]
        )
    for row in rows:
        for cell in row:
            assert "14" not in str(cell), row
    high_count = len({r[2] for r in rows if r[3] > 5})
    assert high_count == 14, high_count
    return rows


# -- fixture 2: assembly line (50 modes, three-pipeline comparison) -------

STEPS = [
    "Electrode slitting",
    "Cell stacking",
    "Electrolyte filling",
    "Laser welding of busbars",
    "Module frame assembly",
    "Thermal paste application",
    "End of line testing",
    "Formation cycling",
]

EFFECTS = [
    ("Internal short circuit risk", 9),
    ("Capacity fade in early cycles", 6),
    ("Coolant leak into housing", 8),
    ("Increased contact resistance", 7),
    ("Module rework required", 4),
    ("Cosmetic blemish on casing", 2),
    ("Line stoppage for cleaning", 5),
    ("Delayed shipment of modules", 3),
    ("Thermal hotspot under load", 8),
    ("Cell venting during formation", 9),
    ("Reduced fatigue strength", 6),
    ("Inaccurate charge reporting", 5),
    ("Loss of traceability data", 4),
    ("Excessive scrap rate", 5),
    ("Compromised ingress protection", 7),
    ("Noisy module under vibration", 3),
    ("Unbalanced cell group", 6),
    ("Field returns under warranty", 7),
]

MEASURES = [
    ("Blade change interval tracking", 2),
    ("Vision check of stack alignment", 3),
    ("Gravimetric fill verification", 2),
    ("Weld penetration ultrasound scan", 4),
    ("Torque wrench calibration plan", 2),
    ("Paste bead camera inspection", 3),
    ("Automated insulation test", 1),
    ("Formation data trend review", 3),
    ("Incoming foil quality audit", 4),
    ("Glovebox humidity interlock", 2),
    ("Busbar surface wipe protocol", 3),
    ("Fixture wear gauge program", 2),
    ("Leak test with tracer gas", 1),
    ("Operator certification refresh", 4),
    ("Contact pin replacement cycle", 2),
]

CAUSE_WORDS_A = [
    "Dull", "Misaligned", "Contaminated", "Worn", "Drifting", "Loose",
    "Cracked", "Blocked", "Overheated", "Unstable",
]
CAUSE_WORDS_B = [
    "slitting blade", "stacking gripper", "fill nozzle", "weld optics",
    "torque driver", "dosing pump", "test probe", "cycler channel",
    "foil reel", "glovebox seal",
]

MODE_WORDS_A = [
    "Torn separator", "Wrinkled electrode foil", "Misplaced cell",
    "Cracked busbar", "Cold weld seam", "Electrolyte underfill",
    "Loose frame bolt", "Uneven paste bead", "False test reject",
    "Overcharged cell",
]
MODE_WORDS_B = [
    "at infeed", "on lane two", "near edge guide", "after changeover",
    "under full load",
]


def assembly_line_rows() -> list[list]:
    modes = []
    for j in range(50):
        modes.append(f"{MODE_WORDS_A[j % 10]} {MODE_WORDS_B[j // 10]}")
    causes = []
    for i in range(30):
        text = f"{CAUSE_WORDS_A[i % 10]} {CAUSE_WORDS_B[(i * 7 + 3 + i // 10) % 10]}"
        occurrence = 2 + (i * 5 + 1) % 7  # 2..8
        causes.append((text, occurrence))
    assert len({c for c, _o in causes}) == 30
    # One bundle per cause keeps every rating literal conflict-free:
    # the cause pins its effect and measure, so its RPN is single-valued.
    bundles = []
    for i, (cause, occurrence) in enumerate(causes):
        effect, severity = EFFECTS[(i * 11 + 2) % len(EFFECTS)]
        measure, detection = MEASURES[(i * 4 + 1) % len(MEASURES)]
        bundles.append((effect, severity, cause, occurrence, measure, detection))
    rows = []
    for j, mode in enumerate(modes):
        step = STEPS[j % len(STEPS)]
        count = 1 + (j % 3)
        for b in range(count):
            effect, severity, cause, occurrence, measure, detection = bundles[
                (j * 3 + b * 13) % len(bundles)
            ]
            rows.append(
                [step, mode, effect, severity, cause, occurrence, measure, detection,
                 severity * occurrence * detection]
            )
    return rows


# -- mock rules and validation questions ----------------------------------

def build_mock_rules(graph_queries: list[tuple[str, str]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["pattern", "completion"])
    for pattern, completion in graph_queries:
        writer.writerow([pattern, completion])
    return out.getvalue()


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)

    screen_rows = severity_screen_rows()
    write_csv(DATA / "severity_screen.csv", screen_rows)
    print(f"severity_screen.csv: {len(screen_rows)} rows")

    line_rows = assembly_line_rows()
    write_csv(DATA / "assembly_line.csv", line_rows)
    print(f"assembly_line.csv: {len(line_rows)} rows")

    table = parse_fmea_table((DATA / "assembly_line.csv").read_text(encoding="utf-8"))
    graph = transpose(table)
    stats = graph.stats()
    print(f"assembly line graph: {stats.total_nodes} nodes, "
          f"{stats.total_relationships} triples, {stats.unique_path_count} paths")

    # Entities referenced by the validation questions, taken from the
    # generated graph so the lookups always hit.
    cause_rows = run_query(
        "MATCH (c:FailureCause) RETURN c.name ORDER BY c.name", graph
    ).rows
    probe_cause = cause_rows[2][0]
    probe_cause_b = cause_rows[20][0]
    probe_mode = "Cracked busbar at infeed"
    probe_effect = "Coolant leak into housing"
    probe_step = "Electrolyte filling"

    queries = {
        "screen": 'MATCH (e:FailureEffect) WHERE e.S > 5 RETURN count(e)',
        "mode_count": 'MATCH (m:FailureMode) RETURN count(m)',
        "rpn_lookup": f'MATCH (c:FailureCause {{name: "{probe_cause}"}}) RETURN c.name, c.RPN',
        "occ_lookup": f'MATCH (c:FailureCause {{name: "{probe_cause_b}"}}) RETURN c.name, c.O',
        "mode_causes": (
            f'MATCH (m:FailureMode {{name: "{probe_mode}"}})-[:isDueToFailureCause]->(c) '
            'RETURN m.name, c.name'
        ),
        "effect_sev": f'MATCH (e:FailureEffect {{name: "{probe_effect}"}}) RETURN e.name, e.S',
        "step_modes": (
            f'MATCH (m:FailureMode)-[:occursAtProcessStep]->(p:ProcessStep {{name: "{probe_step}"}}) '
            'RETURN m.name'
        ),
        "top_rpn": 'MATCH (m:FailureMode)-[:isDueToFailureCause]->(c) '
                   'RETURN c.name, c.RPN ORDER BY c.RPN DESC LIMIT 1',
        "top_sev": 'MATCH (e:FailureEffect) RETURN e.name, e.S ORDER BY e.S DESC LIMIT 1',
        "rpn_sum": (
            f'MATCH (c:FailureCause)<-[:isDueToFailureCause]-(m:FailureMode)'
            f'-[:occursAtProcessStep]->(p:ProcessStep {{name: "{probe_step}"}}) '
            'RETURN sum(c.RPN)'
        ),
    }

    rules = [
        ("How many failure modes", queries["mode_count"]),
        ("How many failure effects with an S value of over 5", queries["screen"]),
        (f"risk priority number of the failure cause {probe_cause}", queries["rpn_lookup"]),
        (f"occurrence rating of the failure cause {probe_cause_b}", queries["occ_lookup"]),
        (f"causes lead to the failure mode {probe_mode}", queries["mode_causes"]),
        (f"severity does the failure effect {probe_effect}", queries["effect_sev"]),
        (f"failure modes occur during {probe_step}", queries["step_modes"]),
        ("highest risk priority number overall", queries["top_rpn"]),
        ("highest severity rating overall", queries["top_sev"]),
        (f"combined RPN of all failure causes at {probe_step}", queries["rpn_sum"]),
    ]
    (DATA / "mock_llm_rules.csv").write_text(build_mock_rules(rules), encoding="utf-8")
    print("mock_llm_rules.csv written")

    # Ground truths come from actually executing the queries.
    def one(query_key: str):
        return run_query(queries[query_key], graph).rows

    screen_count = one("screen")[0][0]
    rpn_value = one("rpn_lookup")[0][1]
    occ_value = one("occ_lookup")[0][1]
    cause_names = [row[1] for row in one("mode_causes")]
    effect_sev = one("effect_sev")[0][1]
    step_mode_names = [row[0] for row in one("step_modes")]
    top_cause, top_rpn = one("top_rpn")[0]
    top_effect, top_sev = one("top_sev")[0]
    rpn_total = one("rpn_sum")[0][0]

    items = [
        {
            "question": "How many failure effects with an S value of over 5 exist?",
            "ground_truth": f"There are {screen_count} failure effects with an S value over five.",
            "relevance_key": [f"count(e): {screen_count}"],
        },
        {
            "question": f"What is the risk priority number of the failure cause {probe_cause}?",
            "ground_truth": f"The RPN of {probe_cause} is {rpn_value}.",
            "relevance_key": [probe_cause],
        },
        {
            "question": f"What is the occurrence rating of the failure cause {probe_cause_b}?",
            "ground_truth": f"{probe_cause_b} has O {occ_value}.",
            "relevance_key": [probe_cause_b],
        },
        {
            "question": f"Which causes lead to the failure mode {probe_mode}?",
            "ground_truth": f"{probe_mode} is due to {', '.join(cause_names)}.",
            "relevance_key": [probe_mode],
        },
        {
            "question": f"What severity does the failure effect {probe_effect} have?",
            "ground_truth": f"{probe_effect} has S {effect_sev}.",
            "relevance_key": [probe_effect],
        },
        {
            "question": f"Which failure modes occur during {probe_step}?",
            "ground_truth": ", ".join(step_mode_names) + " occur there.",
            "relevance_key": step_mode_names,
        },
        {
            "question": "Which failure cause has the highest risk priority number overall?",
            "ground_truth": f"{top_cause} has the highest RPN, {top_rpn}.",
            "relevance_key": [top_cause],
        },
        {
            "question": "Which failure effect has the highest severity rating overall?",
            "ground_truth": f"{top_effect} has the highest S, {top_sev}.",
            "relevance_key": [top_effect],
        },
        {
            "question": f"What is the combined RPN of all failure causes at {probe_step}?",
            "ground_truth": f"The RPN sum there is {rpn_total}.",
            "relevance_key": [f"sum(c.RPN): {rpn_total}"],
        },
        {
            "question": "What should we watch out for during cell stacking?",
            "ground_truth": "Cell stacking sees misplaced cells and wrinkled electrode foil.",
            "relevance_key": ["Cell stacking"],
        },
        {
            "question": "Where does electrolyte underfill happen?",
            "ground_truth": "Electrolyte underfill shows up under full load and on lane two.",
            "relevance_key": ["Electrolyte underfill"],
        },
        {
            "question": "Which countermeasure watches the paste bead?",
            "ground_truth": "Paste bead camera inspection covers the uneven paste bead.",
            "relevance_key": ["Paste bead camera inspection"],
        },
    ]
    (DATA / "assembly_line_questions.json").write_text(
        json.dumps(items, indent=2) + "\n", encoding="utf-8"
    )
    print(f"assembly_line_questions.json: {len(items)} items")

    # Replay the comparison to confirm the strict ordering holds.
    embedder = HashingEmbedder()
    from fmea_rag import embed_all

    embed_all(graph, embedder)
    llm = ScriptedLlm.from_file(DATA / "mock_llm_rules.csv")
    dataset = load_validation_dataset(DATA / "assembly_line_questions.json")
    report = run_eval(dataset, graph, table, llm, embedder, EvalSettings())
    print()
    print(render_report(report))
    by_name = {s.pipeline: s for s in report.pipelines}
    full, vec, base = by_name["kg-full"], by_name["kg-vector-only"], by_name["baseline-rag"]
    ok_cr = full.context_recall > vec.context_recall > base.context_recall
    ok_cp = full.context_precision > vec.context_precision > base.context_precision
    print()
    print(f"CR ordering strict: {ok_cr}   CP ordering strict: {ok_cp}")
    if not (ok_cr and ok_cp):
        sys.exit("fixture does not produce the required strict ordering")


if __name__ == "__main__":
    main()
