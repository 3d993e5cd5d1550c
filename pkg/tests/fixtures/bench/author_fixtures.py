"""Regenerate the benchmark fixture set and its recorded model transcript.

Run from the repository root after changing prompt templates:

    python3 tests/fixtures/bench/author_fixtures.py

The scripted model below is a pure function of the request text, so the
recorded transcript replays identically whatever order the stages run in.
Outcome design for the 10 tasks (full configuration):

* 5 pass on the first compile (TrafficLightCtrl, TankLevelAlarm,
  ScaleAnalogInput, ConveyorSequencer, MovingAverageFilter)
* 3 pass after repair: MotorStarDelta (1 round, declaration error),
  BatchCounter (2 rounds, declaration then implementation),
  PumpAlternation (1 round, unknown function)
* 2 never compile and end with 3 diagnostics each after 3 rounds:
  RecipeChecksum (every round answers prose, then an ambiguous patch) and
  PressureRampCtrl (patches apply but only touch a comment)

So pass_rate = 8/10 = 0.8 and avg_errors = (3 + 3) / 10 = 0.6.
"""
from __future__ import annotations

import json
import re
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parents[2] / "src"))

from stgen.bench import load_tasks, run_benchmark  # noqa: E402
from stgen.generator import PipelineConfig  # noqa: E402
from stgen.kb import load_apilib, load_rq2st  # noqa: E402
from stgen.llm import LlmGateway, Pricing, RecordingBackend, ScriptedBackend  # noqa: E402
from stgen.retrieval import FixtureEmbeddings  # noqa: E402
from stgen.st import load_dialect  # noqa: E402

PRICING = Pricing(prompt_per_1k=0.002, completion_per_1k=0.008)


def p(name, type_name, direction="IN", description=""):
    return {"name": name, "type": type_name, "direction": direction, "description": description}


def api(name, kind, params, description, summary, scenarios, keywords, return_type=None, examples=()):
    rec = {"name": name, "kind": kind, "description": description, "params": params,
           "examples": list(examples),
           "index": {"summary": summary, "scenarios": scenarios, "keywords": keywords}}
    if return_type:
        rec["return_type"] = return_type
    return rec


APILIB = [
    api("SCALE_LINEAR", "FUNCTION",
        [p("IN_VAL", "REAL", description="raw value"), p("IN_MIN", "REAL"), p("IN_MAX", "REAL"),
         p("OUT_MIN", "REAL"), p("OUT_MAX", "REAL")],
        "Linear scaling of a raw value into an engineering range.",
        "Maps a value from an input range linearly onto an output range.",
        ["convert analog input counts to engineering units", "scale sensor readings"],
        ["scale", "analog", "linear", "range", "convert", "sensor"], return_type="REAL",
        examples=["rTemp := SCALE_LINEAR(INT_TO_REAL(nRaw), 0.0, 27648.0, -50.0, 150.0);"]),
    api("HYSTERESIS", "FUNCTION_BLOCK",
        [p("IN", "REAL"), p("HIGH", "REAL"), p("LOW", "REAL"), p("Q", "BOOL", "OUT")],
        "Two-point switch with hysteresis band.",
        "Switches its output on above HIGH and off below LOW.",
        ["level alarm with hysteresis", "on/off temperature control"],
        ["hysteresis", "threshold", "level", "alarm", "switch", "band"]),
    api("DEBOUNCE", "FUNCTION_BLOCK",
        [p("IN", "BOOL"), p("PT", "TIME"), p("Q", "BOOL", "OUT")],
        "Suppresses contact bounce on a digital input.",
        "Passes a digital input through only after it has been stable for PT.",
        ["push button debouncing", "noisy limit switch"],
        ["debounce", "filter", "digital", "input", "button"]),
    api("BLINK", "FUNCTION_BLOCK",
        [p("ENABLE", "BOOL"), p("PERIOD", "TIME"), p("OUT", "BOOL", "OUT")],
        "Square-wave pulse generator.",
        "Toggles its output with the given period while enabled.",
        ["flashing warning lamp", "heartbeat signal"],
        ["blink", "flash", "pulse", "lamp", "oscillator"]),
    api("RAMP_REAL", "FUNCTION_BLOCK",
        [p("TARGET", "REAL"), p("RATE", "REAL", description="units per call"), p("RESET", "BOOL"),
         p("OUT", "REAL", "OUT")],
        "Rate limiter that ramps towards a target.",
        "Moves its output towards TARGET by at most RATE per call.",
        ["soft start of a pressure setpoint", "ramp a speed reference"],
        ["ramp", "rate", "limit", "setpoint", "pressure", "speed"]),
    api("MOVING_AVG", "FUNCTION_BLOCK",
        [p("IN", "REAL"), p("N", "INT"), p("AVG", "REAL", "OUT")],
        "Sliding-window average of the last N samples.",
        "Averages the most recent N input samples.",
        ["smooth a noisy measurement", "filter sensor values"],
        ["average", "moving", "filter", "smooth", "window", "mean"]),
    api("ALARM_LATCH", "FUNCTION_BLOCK",
        [p("TRIGGER", "BOOL"), p("ACK", "BOOL"), p("ACTIVE", "BOOL", "OUT")],
        "Latching alarm with acknowledgement.",
        "Latches an alarm on a trigger and clears it on acknowledgement once the trigger is gone.",
        ["tank overflow alarm", "operator acknowledged fault"],
        ["alarm", "latch", "acknowledge", "fault", "reset"]),
    api("CRC16_BYTES", "FUNCTION",
        [p("DATA", "ARRAY[*] OF BYTE"), p("LEN", "INT")],
        "CRC-16 over a byte buffer.",
        "Computes a CRC-16 checksum over the first LEN bytes of a buffer.",
        ["verify recipe data integrity", "frame checksum"],
        ["crc", "checksum", "integrity", "bytes", "hash"], return_type="WORD"),
    api("RUNTIME_HOURS", "FUNCTION_BLOCK",
        [p("RUN", "BOOL"), p("RESET", "BOOL"), p("HOURS", "REAL", "OUT")],
        "Operating hours meter.",
        "Accumulates the time its RUN input is true, in hours.",
        ["pump maintenance interval", "motor runtime statistics"],
        ["runtime", "hours", "meter", "maintenance", "operating"]),
    api("SEQ_STEP", "FUNCTION_BLOCK",
        [p("NEXT", "BOOL"), p("RESET", "BOOL"), p("MAX_STEP", "INT"), p("STEP", "INT", "OUT")],
        "Step counter for sequential processes.",
        "Advances a step number on each NEXT edge and wraps after MAX_STEP.",
        ["conveyor station sequencing", "batch phase stepping"],
        ["sequence", "step", "conveyor", "station", "advance"]),
    api("DT_DIFF_SECONDS", "FUNCTION",
        [p("T1", "DT"), p("T2", "DT")],
        "Difference between two date-and-time stamps.",
        "Returns the signed number of seconds between two timestamps.",
        ["elapsed time since a logged event", "shift duration"],
        ["time", "difference", "seconds", "timestamp", "elapsed"], return_type="DINT"),
    api("MOVE_BLK_VARIANT", "FUNCTION",
        [p("SRCBLOCK", "ANY"), p("COUNT", "UDINT"), p("SRC_INDEX", "DINT"), p("DEST_INDEX", "DINT"),
         p("DESTBLOCK", "ANY", "OUT")],
        "Copies a block of array elements between arrays of any type.",
        "Copies COUNT elements from one array to another starting at the given indices.",
        ["copy a recipe array", "shift a data buffer"],
        ["copy", "move", "array", "block", "buffer"], return_type="INT"),
    api("PUMP_ROTATE", "FUNCTION_BLOCK",
        [p("REQUEST", "BOOL"), p("PUMPS", "INT"), p("ACTIVE", "INT", "OUT")],
        "Duty/standby rotation among identical pumps.",
        "Selects the next pump in turn each time a new demand starts.",
        ["lead/lag pump alternation", "equal wear of redundant drives"],
        ["pump", "alternate", "rotation", "duty", "standby"]),
]


def task(name, req, io, unit_kind="FUNCTION_BLOCK", return_type=None):
    rec = {"name": name, "req": req, "io": io, "unit_kind": unit_kind, "vendor_target": "codesys_st"}
    if return_type:
        rec["return_type"] = return_type
    return rec


TASKS = [
    task("TrafficLightCtrl",
         "Control a pedestrian crossing: cars have green until a pedestrian presses the request button, "
         "then yellow for 3 seconds, then red with the walk signal for 10 seconds.",
         [p("bRequest", "BOOL", description="pedestrian button"), p("bRed", "BOOL", "OUT"),
          p("bGreen", "BOOL", "OUT"), p("bWalk", "BOOL", "OUT")]),
    task("TankLevelAlarm",
         "Raise a latched high-level alarm when the tank level exceeds the high limit, with hysteresis "
         "down to the low limit; the operator acknowledges the alarm.",
         [p("rLevel", "REAL"), p("rHigh", "REAL"), p("rLow", "REAL"), p("bAck", "BOOL"),
          p("bAlarm", "BOOL", "OUT")]),
    task("ScaleAnalogInput",
         "Convert a raw analog input in counts 0..27648 into an engineering value between a minimum and a maximum.",
         [p("nRaw", "INT"), p("rMin", "REAL"), p("rMax", "REAL")], "FUNCTION", "REAL"),
    task("ConveyorSequencer",
         "Run a conveyor through load, transport and unload stations; each part arriving at the end "
         "advances the station; stop resets the sequence.",
         [p("bStart", "BOOL"), p("bStop", "BOOL"), p("bPartAtEnd", "BOOL"), p("bMotor", "BOOL", "OUT"),
          p("nStation", "INT", "OUT")]),
    task("MovingAverageFilter",
         "Smooth a noisy measurement with a moving average over a configurable window.",
         [p("rIn", "REAL"), p("nWindow", "INT"), p("rOut", "REAL", "OUT")]),
    task("MotorStarDelta",
         "Start a motor in star connection, switch to delta after a fixed delay, stop on the stop button.",
         [p("bStart", "BOOL"), p("bStop", "BOOL"), p("bMain", "BOOL", "OUT"), p("bStar", "BOOL", "OUT"),
          p("bDelta", "BOOL", "OUT")]),
    task("BatchCounter",
         "Count pulses from a sensor and signal when the batch target is reached; reset clears the count.",
         [p("bPulse", "BOOL"), p("nTarget", "INT"), p("bReset", "BOOL"), p("bDone", "BOOL", "OUT"),
          p("nCount", "INT", "OUT")]),
    task("PumpAlternation",
         "Alternate two pumps: each new demand starts the pump that did not run last time.",
         [p("bDemand", "BOOL"), p("bPump1", "BOOL", "OUT"), p("bPump2", "BOOL", "OUT")]),
    task("RecipeChecksum",
         "Compute a checksum over eight recipe words so corrupted recipes can be detected.",
         [p("aData", "ARRAY[1..8] OF INT")], "FUNCTION", "DINT"),
    task("PressureRampCtrl",
         "Ramp the pressure setpoint to the target at a limited rate and report when it is reached; "
         "log the start timestamp.",
         [p("rTarget", "REAL"), p("dtStamp", "DT"), p("rOut", "REAL", "OUT"), p("bAtTarget", "BOOL", "OUT")]),
]

LABELS = {
    "TrafficLightCtrl": "PROCESS_CONTROL", "TankLevelAlarm": "PROCESS_CONTROL",
    "ScaleAnalogInput": "GENERAL_PURPOSE", "ConveyorSequencer": "PROCESS_CONTROL",
    "MovingAverageFilter": "GENERAL_PURPOSE", "MotorStarDelta": "PROCESS_CONTROL",
    "BatchCounter": "GENERAL_PURPOSE", "PumpAlternation": "PROCESS_CONTROL",
    "RecipeChecksum": "GENERAL_PURPOSE", "PressureRampCtrl": "PROCESS_CONTROL",
}


def sm(states, transitions):
    return {"kind": "STATE_MACHINE",
            "states": [{"name": n, "description": d} for n, d in states],
            "transitions": [{"from": a, "to": b, "condition": c} for a, b, c in transitions]}


def linear(*steps):
    return {"kind": "LINEAR", "steps": list(steps)}


PLANS = {
    "TrafficLightCtrl": sm(
        [("CarsGreen", "car lamp green, walk signal off"), ("CarsYellow", "car lamp yellow for three seconds"),
         ("Walk", "car lamp red and walk signal on for ten seconds")],
        [("CarsGreen", "CarsYellow", "the pedestrian button is pressed"),
         ("CarsYellow", "Walk", "the yellow time has elapsed"),
         ("Walk", "CarsGreen", "the walk time has elapsed")]),
    "TankLevelAlarm": sm(
        [("Normal", "alarm output off"), ("Alarm", "alarm output latched on")],
        [("Normal", "Alarm", "the level rises above the high limit with hysteresis"),
         ("Alarm", "Normal", "the operator acknowledges and the level is back below the low limit")]),
    "ScaleAnalogInput": linear(
        "Convert the raw counts to a floating point number.",
        "Scale the value linearly from the counts range onto the engineering range.",
        "Return the scaled analog value."),
    "ConveyorSequencer": sm(
        [("Idle", "motor off"), ("Load", "motor on, waiting at the load station"),
         ("Transport", "motor on between stations"), ("Unload", "motor on at the unload station")],
        [("Idle", "Load", "start is pressed"), ("Load", "Transport", "a part arrives at the end"),
         ("Transport", "Unload", "a part arrives at the end"), ("Unload", "Idle", "stop is pressed")]),
    "MovingAverageFilter": linear(
        "Feed each new sample into a sliding window average.",
        "Output the average of the most recent samples."),
    "MotorStarDelta": sm(
        [("Stopped", "all contactors off"), ("Star", "main and star contactors on"),
         ("Delta", "main and delta contactors on")],
        [("Stopped", "Star", "start is pressed"), ("Star", "Delta", "the switch-over delay has elapsed"),
         ("Star", "Stopped", "stop is pressed"), ("Delta", "Stopped", "stop is pressed")]),
    "BatchCounter": linear(
        "Count each rising edge of the sensor pulse.",
        "Signal done when the count reaches the target.",
        "Clear the count when reset is requested."),
    "PumpAlternation": sm(
        [("Idle", "both pumps off"), ("Running", "the selected pump runs")],
        [("Idle", "Running", "demand appears, select the other pump"),
         ("Running", "Idle", "demand disappears")]),
    "RecipeChecksum": linear(
        "Start the checksum from a seed value.",
        "Combine every recipe word into the running sum with a multiplier.",
        "Return the final checksum."),
    "PressureRampCtrl": sm(
        [("Ramping", "move the setpoint towards the target at a limited rate"),
         ("AtTarget", "hold the setpoint and report it is reached")],
        [("Ramping", "AtTarget", "the setpoint equals the target"),
         ("AtTarget", "Ramping", "the target changes")]),
}

WANTED = {
    "TrafficLightCtrl": set(), "TankLevelAlarm": {"HYSTERESIS", "ALARM_LATCH"},
    "ScaleAnalogInput": {"SCALE_LINEAR"}, "ConveyorSequencer": {"SEQ_STEP"},
    "MovingAverageFilter": {"MOVING_AVG"}, "MotorStarDelta": set(), "BatchCounter": set(),
    "PumpAlternation": {"PUMP_ROTATE"}, "RecipeChecksum": {"CRC16_BYTES"},
    "PressureRampCtrl": {"RAMP_REAL", "DT_DIFF_SECONDS"},
}

CODE = {
    "TrafficLightCtrl": """FUNCTION_BLOCK TrafficLightCtrl
VAR_INPUT
    bRequest : BOOL;
END_VAR
VAR_OUTPUT
    bRed : BOOL;
    bGreen : BOOL;
    bWalk : BOOL;
END_VAR
VAR
    nState : INT := 0;
    tmrPhase : TON;
END_VAR
CASE nState OF
    0:
        bGreen := TRUE;
        bRed := FALSE;
        bWalk := FALSE;
        IF bRequest THEN
            nState := 1;
        END_IF;
    1:
        bGreen := FALSE;
        tmrPhase(IN := TRUE, PT := T#3s);
        IF tmrPhase.Q THEN
            tmrPhase(IN := FALSE);
            nState := 2;
        END_IF;
    2:
        bRed := TRUE;
        bWalk := TRUE;
        tmrPhase(IN := TRUE, PT := T#10s);
        IF tmrPhase.Q THEN
            tmrPhase(IN := FALSE);
            nState := 0;
        END_IF;
END_CASE;
END_FUNCTION_BLOCK
""",
    "TankLevelAlarm": """FUNCTION_BLOCK TankLevelAlarm
VAR_INPUT
    rLevel : REAL;
    rHigh : REAL;
    rLow : REAL;
    bAck : BOOL;
END_VAR
VAR_OUTPUT
    bAlarm : BOOL;
END_VAR
VAR
    fbHyst : HYSTERESIS;
    fbLatch : ALARM_LATCH;
END_VAR
fbHyst(IN := rLevel, HIGH := rHigh, LOW := rLow);
fbLatch(TRIGGER := fbHyst.Q, ACK := bAck, ACTIVE => bAlarm);
END_FUNCTION_BLOCK
""",
    "ScaleAnalogInput": """FUNCTION ScaleAnalogInput : REAL
VAR_INPUT
    nRaw : INT;
    rMin : REAL;
    rMax : REAL;
END_VAR
ScaleAnalogInput := SCALE_LINEAR(INT_TO_REAL(nRaw), 0.0, 27648.0, rMin, rMax);
END_FUNCTION
""",
    "ConveyorSequencer": """FUNCTION_BLOCK ConveyorSequencer
VAR_INPUT
    bStart : BOOL;
    bStop : BOOL;
    bPartAtEnd : BOOL;
END_VAR
VAR_OUTPUT
    bMotor : BOOL;
    nStation : INT;
END_VAR
VAR
    fbStep : SEQ_STEP;
    bRunning : BOOL;
END_VAR
IF bStart THEN
    bRunning := TRUE;
END_IF;
IF bStop THEN
    bRunning := FALSE;
END_IF;
fbStep(NEXT := bPartAtEnd AND bRunning, RESET := bStop, MAX_STEP := 3, STEP => nStation);
bMotor := bRunning;
END_FUNCTION_BLOCK
""",
    "MovingAverageFilter": """FUNCTION_BLOCK MovingAverageFilter
VAR_INPUT
    rIn : REAL;
    nWindow : INT := 10;
END_VAR
VAR_OUTPUT
    rOut : REAL;
END_VAR
VAR
    fbAvg : MOVING_AVG;
END_VAR
fbAvg(IN := rIn, N := LIMIT(1, nWindow, 100));
rOut := fbAvg.AVG;
END_FUNCTION_BLOCK
""",
    "MotorStarDelta": """FUNCTION_BLOCK MotorStarDelta
VAR_INPUT
    bStart : BOOL;
    bStop : BOOL;
END_VAR
VAR_OUTPUT
    bMain : BOOL;
    bStar : BOOL;
    bDelta : BOOL;
END_VAR
VAR
    nState : INT;
    tSwitch : TIME := 5;
    tmrStar : TON;
END_VAR
IF bStop THEN
    nState := 0;
END_IF;
CASE nState OF
    0:
        bMain := FALSE;
        bStar := FALSE;
        bDelta := FALSE;
        IF bStart AND NOT bStop THEN
            nState := 1;
        END_IF;
    1:
        bMain := TRUE;
        bStar := TRUE;
        tmrStar(IN := TRUE, PT := tSwitch);
        IF tmrStar.Q THEN
            tmrStar(IN := FALSE);
            bStar := FALSE;
            nState := 2;
        END_IF;
    2:
        bDelta := TRUE;
END_CASE;
END_FUNCTION_BLOCK
""",
    "BatchCounter": """FUNCTION_BLOCK BatchCounter
VAR_INPUT
    bPulse : BOOL;
    nTarget : INT;
    bReset : BOOL;
END_VAR
VAR_OUTPUT
    bDone : BOOL;
    nCount : INT;
END_VAR
VAR
    ctuBatch : CTU_INT;
END_VAR
ctuBatch(CU := bPulse, R := bReset, PV := nTarget, CV => nCount);
bDone := nCount;
END_FUNCTION_BLOCK
""",
    "PumpAlternation": """FUNCTION_BLOCK PumpAlternation
VAR_INPUT
    bDemand : BOOL;
END_VAR
VAR_OUTPUT
    bPump1 : BOOL;
    bPump2 : BOOL;
END_VAR
VAR
    rtDemand : R_TRIG;
    nActive : INT := 2;
END_VAR
rtDemand(CLK := bDemand);
IF rtDemand.Q THEN
    nActive := SWAP_PUMP(nActive);
END_IF;
bPump1 := bDemand AND nActive = 1;
bPump2 := bDemand AND nActive = 2;
END_FUNCTION_BLOCK
""",
    "RecipeChecksum": """FUNCTION RecipeChecksum : DINT
VAR_INPUT
    aData : ARRAY[1..8] OF INT;
END_VAR
VAR
    i : INT;
    nSum : DINT;
END_VAR
nSum := nSeed;
FOR i := 1 TO 8 DO
    nSum := nSum + aData[i] * 31;
END_FOR;
bValid := TRUE;
RecipeChecksum := CHECKSUM_FINAL(nSum);
END_FUNCTION
""",
    "PressureRampCtrl": """FUNCTION_BLOCK PressureRampCtrl
VAR_INPUT
    rTarget : REAL;
    dtStamp : DT;
END_VAR
VAR_OUTPUT
    rOut : REAL;
    bAtTarget : BOOL;
END_VAR
(* ramp v1 *)
rOut := RAMP(rTarget);
bAtTarget := rOut;
nTicks := 5;
END_FUNCTION_BLOCK
""",
}


def edits(*triples):
    return json.dumps({"edits": [{"find": f, "replace": r, "section": s} for f, r, s in triples]})


def repair_reply(name: str, user: str) -> str:
    retry = "could not be read" in user
    if name == "MotorStarDelta":
        return "```json\n" + edits(("tSwitch : TIME := 5;", "tSwitch : TIME := T#5s;", "DECLARATION")) + "\n```"
    if name == "BatchCounter":
        if "CTU_INT" in user:
            return edits(("ctuBatch : CTU_INT;", "ctuBatch : CTU;", "DECLARATION"))
        return edits(("bDone := nCount;", "bDone := ctuBatch.Q;", "IMPLEMENTATION"))
    if name == "PumpAlternation":
        return edits(("nActive := SWAP_PUMP(nActive);", "nActive := 3 - nActive;", "IMPLEMENTATION"))
    if name == "RecipeChecksum":
        if not retry:
            return "The checksum seed is missing and a helper function does not exist; declare them."
        return edits(("nSum := ", "nSum := nSum + ", "IMPLEMENTATION"))
    if name == "PressureRampCtrl":
        m = re.search(r"\(\* ramp v(\d+) \*\)", user)
        v = int(m.group(1)) if m else 1
        return edits((f"(* ramp v{v} *)", f"(* ramp v{v + 1} *)", "IMPLEMENTATION"))
    return edits()


NAME_PATTERNS = {
    "classify": r"^Program name: (\S+)",
    "plan": r"^Program name: (\S+)",
    "rerank": r"^New task: (\S+)",
    "api_filter": r"^Task: (\S+)",
    "generate": r"^Unit: \S+ (\S+?)(?: :|$)",
    "repair": r"^(?:The declaration part of )?(\S+) does not compile",
}


def respond(req) -> str:
    m = re.search(NAME_PATTERNS[req.tag], req.user, re.MULTILINE)
    if m is None:
        raise RuntimeError(f"cannot tell which task a {req.tag} request belongs to")
    name = m.group(1)
    if req.tag == "classify":
        return LABELS[name]
    if req.tag == "plan":
        return "```json\n" + json.dumps(PLANS[name], indent=1) + "\n```"
    if req.tag == "rerank":
        ids = re.findall(r"^\[(\S+)\]", req.user, re.MULTILINE)
        return json.dumps({"ranking": list(reversed(ids))[:3]})
    if req.tag == "api_filter":
        names = re.findall(r"^- name: (\S+)", req.user, re.MULTILINE)
        return json.dumps({"keep": [n for n in names if n in WANTED[name]]})
    if req.tag == "generate":
        return f"Here is the unit.\n\n```st\n{CODE[name]}```\n"
    if req.tag == "repair":
        return repair_reply(name, req.user)
    raise RuntimeError(f"unexpected tag {req.tag}")


def case(cid, name, req, io, plan, code, apis, unit_kind="FUNCTION_BLOCK", return_type=None):
    return {"id": cid, "task": task(name, req, io, unit_kind, return_type), "plan": plan, "code": code,
            "apis": apis}


CASES = [
    case("c01", "PedestrianCrossing", "Crossing light with request button and timed phases.",
         [p("bButton", "BOOL"), p("bCarGreen", "BOOL", "OUT"), p("bWalk", "BOOL", "OUT")],
         sm([("Green", "cars go"), ("Walk", "pedestrians go")],
            [("Green", "Walk", "button pressed"), ("Walk", "Green", "walk time over")]),
         "FUNCTION_BLOCK PedestrianCrossing\nVAR_INPUT\n    bButton : BOOL;\nEND_VAR\nVAR_OUTPUT\n"
         "    bCarGreen : BOOL;\n    bWalk : BOOL;\nEND_VAR\nVAR\n    tmr : TON;\nEND_VAR\n"
         "tmr(IN := bButton, PT := T#8s);\nbWalk := bButton AND NOT tmr.Q;\nbCarGreen := NOT bWalk;\n"
         "END_FUNCTION_BLOCK\n", []),
    case("c02", "TrafficLightCtrl_Legacy", "Old traffic light controller kept for reference.",
         [p("bReq", "BOOL")], linear("Cycle the lamps."),
         "FUNCTION_BLOCK TrafficLightCtrl_Legacy\nVAR_INPUT\n    bReq : BOOL;\nEND_VAR\nEND_FUNCTION_BLOCK\n", []),
    case("c03", "BoilerLevelControl", "Alarm on high boiler level with hysteresis and acknowledgement.",
         [p("rLevel", "REAL"), p("bAck", "BOOL"), p("bAlarm", "BOOL", "OUT")],
         sm([("Ok", "no alarm"), ("High", "alarm latched")],
            [("Ok", "High", "level above limit"), ("High", "Ok", "acknowledged and level low")]),
         "FUNCTION_BLOCK BoilerLevelControl\nVAR_INPUT\n    rLevel : REAL;\n    bAck : BOOL;\nEND_VAR\n"
         "VAR_OUTPUT\n    bAlarm : BOOL;\nEND_VAR\nVAR\n    h : HYSTERESIS;\n    a : ALARM_LATCH;\nEND_VAR\n"
         "h(IN := rLevel, HIGH := 90.0, LOW := 80.0);\na(TRIGGER := h.Q, ACK := bAck, ACTIVE => bAlarm);\n"
         "END_FUNCTION_BLOCK\n", ["HYSTERESIS", "ALARM_LATCH"]),
    case("c04", "FlowSensorScaling", "Scale a 4-20 mA flow sensor reading to litres per minute.",
         [p("nRaw", "INT")],
         linear("Convert the counts to a real number.", "Scale onto the flow range."),
         "FUNCTION FlowSensorScaling : REAL\nVAR_INPUT\n    nRaw : INT;\nEND_VAR\n"
         "FlowSensorScaling := SCALE_LINEAR(INT_TO_REAL(nRaw), 5530.0, 27648.0, 0.0, 120.0);\nEND_FUNCTION\n",
         ["SCALE_LINEAR"], "FUNCTION", "REAL"),
    case("c05", "BottleCounter", "Count bottles on a conveyor and flag a full crate.",
         [p("bSensor", "BOOL"), p("bFull", "BOOL", "OUT")],
         linear("Count sensor edges.", "Flag full at twelve bottles."),
         "FUNCTION_BLOCK BottleCounter\nVAR_INPUT\n    bSensor : BOOL;\nEND_VAR\nVAR_OUTPUT\n    bFull : BOOL;\n"
         "END_VAR\nVAR\n    c : CTU;\nEND_VAR\nc(CU := bSensor, PV := 12, Q => bFull);\nEND_FUNCTION_BLOCK\n", []),
    case("c06", "TemperatureSmoothing", "Average the last samples of a temperature input.",
         [p("rTemp", "REAL"), p("rSmooth", "REAL", "OUT")],
         linear("Feed the temperature into a moving average.", "Output the average."),
         "FUNCTION_BLOCK TemperatureSmoothing\nVAR_INPUT\n    rTemp : REAL;\nEND_VAR\nVAR_OUTPUT\n"
         "    rSmooth : REAL;\nEND_VAR\nVAR\n    f : MOVING_AVG;\nEND_VAR\nf(IN := rTemp, N := 8);\n"
         "rSmooth := f.AVG;\nEND_FUNCTION_BLOCK\n", ["MOVING_AVG"]),
    case("c07", "CompressorStarter", "Start a compressor with a timed unloaded start phase.",
         [p("bStart", "BOOL"), p("bLoad", "BOOL", "OUT")],
         sm([("Off", "stopped"), ("Unloaded", "running unloaded"), ("Loaded", "running loaded")],
            [("Off", "Unloaded", "start pressed"), ("Unloaded", "Loaded", "start delay over")]),
         "FUNCTION_BLOCK CompressorStarter\nVAR_INPUT\n    bStart : BOOL;\nEND_VAR\nVAR_OUTPUT\n"
         "    bLoad : BOOL;\nEND_VAR\nVAR\n    t : TON;\nEND_VAR\nt(IN := bStart, PT := T#4s, Q => bLoad);\n"
         "END_FUNCTION_BLOCK\n", []),
    case("c08", "ConveyorTracking", "Track parts through conveyor stations.",
         [p("bPart", "BOOL"), p("nStation", "INT", "OUT")],
         linear("Advance the station number on each part.", "Wrap after the last station."),
         "FUNCTION_BLOCK ConveyorTracking\nVAR_INPUT\n    bPart : BOOL;\nEND_VAR\nVAR_OUTPUT\n"
         "    nStation : INT;\nEND_VAR\nVAR\n    s : SEQ_STEP;\nEND_VAR\n"
         "s(NEXT := bPart, RESET := FALSE, MAX_STEP := 4, STEP => nStation);\nEND_FUNCTION_BLOCK\n",
         ["SEQ_STEP"]),
    case("c09", "PumpDutyRotation", "Rotate duty among three pumps on each demand.",
         [p("bDemand", "BOOL"), p("nPump", "INT", "OUT")],
         linear("Detect a new demand.", "Select the next pump."),
         "FUNCTION_BLOCK PumpDutyRotation\nVAR_INPUT\n    bDemand : BOOL;\nEND_VAR\nVAR_OUTPUT\n"
         "    nPump : INT;\nEND_VAR\nVAR\n    r : PUMP_ROTATE;\nEND_VAR\n"
         "r(REQUEST := bDemand, PUMPS := 3, ACTIVE => nPump);\nEND_FUNCTION_BLOCK\n", ["PUMP_ROTATE"]),
    case("c10", "ChecksumWords", "CRC over a telegram buffer.",
         [p("aBuf", "ARRAY[0..15] OF BYTE")],
         linear("Run the CRC over the buffer.", "Return the CRC."),
         "FUNCTION ChecksumWords : WORD\nVAR_INPUT\n    aBuf : ARRAY[0..15] OF BYTE;\nEND_VAR\n"
         "ChecksumWords := CRC16_BYTES(aBuf, 16);\nEND_FUNCTION\n", ["CRC16_BYTES"], "FUNCTION", "WORD"),
    case("c11", "AlarmBlinker", "Flash a lamp while an alarm is active until acknowledged.",
         [p("bFault", "BOOL"), p("bAck", "BOOL"), p("bLamp", "BOOL", "OUT")],
         linear("Latch the alarm.", "Blink the lamp while latched."),
         "FUNCTION_BLOCK AlarmBlinker\nVAR_INPUT\n    bFault : BOOL;\n    bAck : BOOL;\nEND_VAR\nVAR_OUTPUT\n"
         "    bLamp : BOOL;\nEND_VAR\nVAR\n    l : ALARM_LATCH;\n    b : BLINK;\nEND_VAR\n"
         "l(TRIGGER := bFault, ACK := bAck);\nb(ENABLE := l.ACTIVE, PERIOD := T#1s, OUT => bLamp);\n"
         "END_FUNCTION_BLOCK\n", ["ALARM_LATCH", "BLINK", "OLD_BLINK"]),
    case("c12", "HeaterRamp", "Ramp a heater setpoint slowly to protect the element.",
         [p("rSet", "REAL"), p("rOut", "REAL", "OUT")], None,
         "FUNCTION_BLOCK HeaterRamp\nVAR_INPUT\n    rSet : REAL;\nEND_VAR\nVAR_OUTPUT\n    rOut : REAL;\n"
         "END_VAR\nVAR\n    r : RAMP_REAL;\nEND_VAR\nr(TARGET := rSet, RATE := 0.5, OUT => rOut);\n"
         "END_FUNCTION_BLOCK\n", ["RAMP_REAL"]),
]

# 6 loose topics: sequencing, level/alarm, scaling, counting, filtering, drives
CASE_VECTORS = {
    "c01": [0.9, 0.1, 0.0, 0.0, 0.0, 0.2], "c02": [0.95, 0.0, 0.0, 0.1, 0.0, 0.1],
    "c03": [0.1, 0.9, 0.1, 0.0, 0.1, 0.0], "c04": [0.0, 0.1, 0.9, 0.0, 0.2, 0.0],
    "c05": [0.1, 0.0, 0.0, 0.9, 0.0, 0.1], "c06": [0.0, 0.1, 0.3, 0.0, 0.9, 0.0],
    "c07": [0.3, 0.0, 0.0, 0.0, 0.0, 0.9], "c08": [0.6, 0.0, 0.0, 0.5, 0.0, 0.2],
    "c09": [0.3, 0.2, 0.0, 0.0, 0.0, 0.7], "c10": [0.0, 0.0, 0.2, 0.3, 0.5, 0.0],
    "c11": [0.2, 0.8, 0.0, 0.0, 0.0, 0.1], "c12": [0.1, 0.1, 0.2, 0.0, 0.3, 0.6],
}
TASK_VECTORS = {
    "TrafficLightCtrl": [0.9, 0.1, 0.0, 0.0, 0.0, 0.1], "TankLevelAlarm": [0.1, 0.9, 0.1, 0.0, 0.0, 0.0],
    "ScaleAnalogInput": [0.0, 0.1, 0.9, 0.0, 0.1, 0.0], "ConveyorSequencer": [0.7, 0.0, 0.0, 0.4, 0.0, 0.2],
    "MovingAverageFilter": [0.0, 0.0, 0.2, 0.0, 0.9, 0.0], "MotorStarDelta": [0.3, 0.0, 0.0, 0.0, 0.0, 0.9],
    "BatchCounter": [0.1, 0.0, 0.0, 0.9, 0.1, 0.0], "PumpAlternation": [0.3, 0.1, 0.0, 0.0, 0.0, 0.8],
    "RecipeChecksum": [0.0, 0.0, 0.1, 0.3, 0.6, 0.0], "PressureRampCtrl": [0.2, 0.1, 0.1, 0.0, 0.3, 0.7],
}

ABLATIONS = {
    "full": {},
    "no_planning": {"planning": False},
    "no_cases": {"use_cases": False},
    "no_api_rec": {"api_rec": False},
    "no_self_improve": {"self_improve": False},
}


def write_jsonl(path: Path, records) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def build_config(**flags) -> PipelineConfig:
    apilib = load_apilib(HERE / "apilib.jsonl")
    return PipelineConfig(
        dialect=load_dialect("codesys_st"),
        apilib=apilib,
        cases=load_rq2st(HERE / "rq2st.jsonl", apilib),
        embeddings=FixtureEmbeddings(HERE / "embeddings.jsonl"),
        **flags,
    )


def main() -> None:
    write_jsonl(HERE / "apilib.jsonl", APILIB)
    write_jsonl(HERE / "tasks.jsonl", TASKS)
    write_jsonl(HERE / "rq2st.jsonl", CASES)
    write_jsonl(HERE / "embeddings.jsonl",
                [{"case_id": k, "vector": v} for k, v in CASE_VECTORS.items()]
                + [{"task": k, "vector": v} for k, v in TASK_VECTORS.items()])
    transcript = HERE / "transcript.jsonl"
    if transcript.exists():
        transcript.unlink()
    tasks = load_tasks(HERE / "tasks.jsonl")
    for label, flags in ABLATIONS.items():
        llm = LlmGateway(RecordingBackend(ScriptedBackend(respond), transcript, PRICING), PRICING)
        run = run_benchmark(tasks, build_config(**flags), llm)
        m = run.metrics
        print(f"{label:16s} pass_rate={m.pass_rate:.2f} avg_errors={m.avg_errors:.2f} "
              f"iterations={[r.iterations_used for r in run.results]} errored={m.errored}")
    # keep one record per (tag, digest) so the file stays small and diff-friendly
    seen, unique = set(), []
    for line in transcript.read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        key = (rec["tag"], rec["digest"])
        if key not in seen:
            seen.add(key)
            unique.append(line)
    transcript.write_text("\n".join(unique) + "\n", encoding="utf-8")
    print(f"{len(unique)} transcript records")


if __name__ == "__main__":
    main()
