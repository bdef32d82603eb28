"""Driving command derivation from scene geometry.

Commands are a deterministic function of object layout: pedestrians near
the lane demand a stop, otherwise the nearest object decides whether to
swerve or carry on. Each command has one fixed natural-language sentence
drawn from the closed instruction vocabulary.
"""

from __future__ import annotations

from ffusion.scene.spec import SceneSpec

COMMANDS = ("stop", "go", "turn_left", "turn_right")
COMMAND_IDS = {name: i for i, name in enumerate(COMMANDS)}

SENTENCES = {
    "stop": "stop ahead pedestrian",
    "go": "lane clear go straight",
    "turn_left": "caution obstacle turn left",
    "turn_right": "caution obstacle turn right",
}

# Lateral thresholds, meters from the lane center line.
PEDESTRIAN_STOP_RANGE = 5.0
LANE_CLEAR_RANGE = 2.5


def derive_command(scene: SceneSpec) -> tuple:
    """Return (command, sentence) for a scene.

    stop        a pedestrian stands within PEDESTRIAN_STOP_RANGE of the lane
    turn_left   nearest object crowds the lane from the right (x >= 0)
    turn_right  nearest object crowds the lane from the left (x < 0)
    go          nearest object is clear of the lane entirely
    """
    for obj in scene.objects:
        if obj.class_name == "pedestrian" and abs(obj.center[0]) <= PEDESTRIAN_STOP_RANGE:
            return "stop", SENTENCES["stop"]
    nearest = min(scene.objects, key=lambda o: float(o.center[2]))
    x = float(nearest.center[0])
    if abs(x) <= LANE_CLEAR_RANGE:
        command = "turn_left" if x >= 0.0 else "turn_right"
    else:
        command = "go"
    return command, SENTENCES[command]
