"""Bundled task catalog: 27 desk-scale task specs across the nine task groups.

Geometry is in meters in a robot-centred frame (x forward, y left, z up). All
entities share the two-finger contact layout of the gripper so contact
distances can reach zero.
"""

from __future__ import annotations

from .types import EndPredicate, EnvState, SubtaskSpec, TaskSpec

FINGERS = ((0.0, -0.02, 0.0), (0.0, 0.02, 0.0))
GRIPPER_START = ((0.0, -0.02, 0.6), (0.0, 0.02, 0.6))
EPS_CONTACT = 0.02
EPS_PLACE = 0.05


def _scene(entities: dict) -> EnvState:
    return EnvState({k: tuple(map(float, v)) for k, v in entities.items()}, GRIPPER_START, False)


def grasp(sid, entity, pos, desc) -> SubtaskSpec:
    return SubtaskSpec(sid, "grasp", entity, FINGERS, tuple(pos), 0.0, EndPredicate(EPS_CONTACT, None, True), desc)


def place(sid, entity, goal, desc, beta=0.5) -> SubtaskSpec:
    return SubtaskSpec(sid, "place", entity, FINGERS, tuple(goal), beta, EndPredicate(None, EPS_PLACE, False), desc)


def pull(sid, entity, goal, desc, kind="pull", beta=0.5) -> SubtaskSpec:
    return SubtaskSpec(sid, kind, entity, FINGERS, tuple(goal), beta, EndPredicate(None, EPS_PLACE, False), desc)


def press(sid, entity, pos, desc) -> SubtaskSpec:
    return SubtaskSpec(sid, "press", entity, FINGERS, tuple(pos), 0.0, EndPredicate(EPS_CONTACT, None, None), desc)


def _pick_place(tid, obj, src, goal, location_entity, location_phrase, source_phrase):
    ent = obj.replace(" ", "_")
    entities = {ent: src, location_entity: goal}
    desc = f"pick the {obj} from {source_phrase} and place it in {location_phrase}"
    if location_phrase == "the counter":
        desc = f"pick the {obj} from {source_phrase} and place it on the counter"
    return TaskSpec(
        id=tid,
        task_group="pick_and_place",
        description=desc,
        subtasks=(
            grasp(f"{tid}.grasp", ent, src, f"grasp the {obj}"),
            place(f"{tid}.place", ent, goal, f"place the {obj} {'on' if location_phrase == 'the counter' else 'in'} {location_phrase}"),
        ),
        scene=_scene(entities),
        frame_budget=30,
        names={"obj": obj, "obj_entity": ent, "target_location": location_phrase},
    )


def _door(tid, fixture, verb, start, goal):
    ent = f"{fixture}_handle"
    return TaskSpec(
        id=tid,
        task_group="open_close",
        description=f"{verb} the {fixture}",
        subtasks=(pull(f"{tid}.{verb}", ent, goal, f"{verb} the {fixture}"),),
        scene=_scene({ent: start}),
        frame_budget=30,
        names={"fixture": fixture, "verb": verb, "obj_entity": ent},
    )


def _button(tid, ent, pos, desc, button_phrase, extra=None):
    entities = {ent: pos}
    entities.update(extra or {})
    return TaskSpec(
        id=tid,
        task_group="appliances",
        description=desc,
        subtasks=(press(f"{tid}.press", ent, pos, desc),),
        scene=_scene(entities),
        frame_budget=30,
        names={"button": button_phrase, "obj_entity": ent},
    )


def _toggle(tid, ent, start, goal, desc, contact_phrase, turn_phrase, complete_phrase):
    return TaskSpec(
        id=tid,
        task_group="toggle",
        description=desc,
        subtasks=(pull(f"{tid}.turn", ent, goal, desc, kind="turn"),),
        scene=_scene({ent: start}),
        frame_budget=30,
        names={
            "contact_target": contact_phrase,
            "turn_target": turn_phrase,
            "complete": complete_phrase,
            "obj_entity": ent,
        },
    )


def _two_item(tid, group, desc, items, location_phrase, keys):
    entities = {}
    subs = []
    names = {"target_location": location_phrase}
    for (name, src, goal), key in zip(items, keys):
        ent = name.replace(" ", "_")
        entities[ent] = src
        subs.append(grasp(f"{tid}.grasp_{ent}", ent, src, f"grasp the {name}"))
        subs.append(place(f"{tid}.place_{ent}", ent, goal, f"place the {name} in {location_phrase}"))
        names[key] = name
        names[f"{key}_entity"] = ent
    return TaskSpec(tid, group, desc, tuple(subs), _scene(entities), 60, "composite", names)


def build_catalog() -> list[TaskSpec]:
    specs: list[TaskSpec] = []
    pp = [
        ("PickPlaceCabToCounter", "bowl", (0.45, -0.30, 0.85), (0.40, 0.25, 0.35), "counter", "the counter", "the cabinet"),
        ("PickPlaceCounterToCab", "cheese", (0.40, 0.25, 0.35), (0.45, -0.30, 0.85), "cabinet", "the cabinet", "the counter"),
        ("PickPlaceCounterToMicrowave", "potato", (0.35, -0.20, 0.35), (0.60, 0.25, 0.55), "microwave", "the microwave", "the counter"),
        ("PickPlaceCounterToSink", "cup", (0.35, 0.30, 0.35), (0.55, -0.20, 0.25), "sink", "the sink", "the counter"),
        ("PickPlaceCounterToStove", "kettle", (0.30, -0.25, 0.35), (0.55, 0.20, 0.40), "stove", "the stove", "the counter"),
        ("PickPlaceMicrowaveToCounter", "bread", (0.60, 0.25, 0.55), (0.35, -0.20, 0.35), "counter", "the counter", "the microwave"),
        ("PickPlaceSinkToCounter", "apple", (0.55, -0.20, 0.25), (0.35, 0.30, 0.35), "counter", "the counter", "the sink"),
        ("PickPlaceStoveToCounter", "pot", (0.55, 0.20, 0.40), (0.30, -0.25, 0.35), "counter", "the counter", "the stove"),
        ("CoffeeSetupMug", "mug", (0.35, 0.25, 0.35), (0.60, -0.10, 0.45), "coffee_machine", "the coffee machine", "the counter"),
        ("CoffeeServeMug", "mug", (0.60, -0.10, 0.45), (0.35, 0.25, 0.35), "counter", "the counter", "the coffee machine"),
    ]
    for tid, obj, src, goal, loc_ent, loc_phrase, source_phrase in pp:
        specs.append(_pick_place(tid, obj, src, goal, loc_ent, loc_phrase, source_phrase))

    specs += [
        _door("OpenSingleDoor", "door", "open", (0.55, 0.10, 0.55), (0.35, 0.30, 0.55)),
        _door("CloseSingleDoor", "door", "close", (0.35, 0.30, 0.55), (0.55, 0.10, 0.55)),
        _door("OpenDrawer", "drawer", "open", (0.50, 0.00, 0.30), (0.20, 0.00, 0.30)),
        _door("CloseDrawer", "drawer", "close", (0.20, 0.00, 0.30), (0.50, 0.00, 0.30)),
    ]

    specs += [
        _button("TurnOnMicrowave", "microwave_start_button", (0.55, 0.35, 0.60),
                "press the start button of the microwave", "start button of the microwave"),
        _button("TurnOffMicrowave", "microwave_stop_button", (0.55, 0.38, 0.48),
                "press the stop button of the microwave", "stop button of the microwave"),
        _button("CoffeePressButton", "coffee_start_button", (0.60, -0.15, 0.65),
                "press the start button of the coffee machine", "start button of the coffee machine"),
    ]

    specs += [
        _toggle("TurnSinkSpout", "sink_spout", (0.50, -0.25, 0.40), (0.50, -0.10, 0.40),
                "turn the sink spout", "sink spout", "sink spout", "turn the sink spout"),
        _toggle("TurnOnSinkFaucet", "sink_handle", (0.55, -0.30, 0.35), (0.55, -0.30, 0.47),
                "turn on the sink faucet", "sink", "sink handle", "turn on the sink"),
        _toggle("TurnOffSinkFaucet", "sink_handle", (0.55, -0.30, 0.47), (0.55, -0.30, 0.35),
                "turn off the sink faucet", "sink", "sink handle", "turn off the sink"),
        _toggle("TurnOnStove", "stove_knob", (0.40, 0.30, 0.30), (0.40, 0.42, 0.30),
                "turn on the stove", "stove", "stove knob", "turn on the stove"),
        _toggle("TurnOffStove", "stove_knob", (0.40, 0.42, 0.30), (0.40, 0.30, 0.30),
                "turn off the stove", "stove", "stove knob", "turn off the stove"),
    ]

    t = "MicrowaveThawing"
    specs.append(
        TaskSpec(
            t,
            "microwave_thawing",
            "thaw the steak in the microwave",
            (
                pull(f"{t}.open_door", "microwave_door_handle", (0.35, 0.50, 0.55), "open the microwave door"),
                grasp(f"{t}.grasp_steak", "steak", (0.30, -0.25, 0.35), "grasp the steak"),
                place(f"{t}.place_steak", "steak", (0.65, 0.35, 0.52), "place the steak in the microwave"),
                pull(f"{t}.close_door", "microwave_door_handle", (0.55, 0.30, 0.55), "close the microwave door"),
                press(f"{t}.press_start", "microwave_start_button", (0.60, 0.45, 0.72), "press the microwave start button"),
            ),
            _scene({
                "microwave_door_handle": (0.55, 0.30, 0.55),
                "steak": (0.30, -0.25, 0.35),
                "microwave_start_button": (0.60, 0.45, 0.72),
            }),
            60,
            "composite",
            {"obj": "steak", "obj_entity": "steak", "door_entity": "microwave_door_handle"},
        )
    )
    specs.append(
        _two_item(
            "RestockPantry", "restock_pantry", "restock the pantry with the cereal and the soup can",
            [("cereal", (0.35, -0.30, 0.35), (0.55, 0.20, 0.85)), ("soup can", (0.30, 0.10, 0.35), (0.55, 0.32, 0.85))],
            "the cabinet", ("obj1", "obj2"),
        )
    )
    specs.append(
        _two_item(
            "ArrangeVegetables", "arrange_vegetables", "arrange the carrot and the cucumber on the cutting board",
            [("carrot", (0.30, -0.20, 0.35), (0.50, 0.25, 0.35)), ("cucumber", (0.35, -0.35, 0.35), (0.50, 0.37, 0.35))],
            "the cutting board", ("vegetable1", "vegetable2"),
        )
    )
    t = "PrepareCoffee"
    specs.append(
        TaskSpec(
            t,
            "prepare_coffee",
            "prepare coffee with the mug and the coffee machine",
            (
                grasp(f"{t}.grasp_mug", "mug", (0.35, 0.25, 0.35), "grasp the mug"),
                place(f"{t}.place_mug", "mug", (0.60, -0.10, 0.45), "place the mug in the coffee machine"),
                press(f"{t}.press_start", "coffee_start_button", (0.62, -0.12, 0.65), "press the coffee machine start button"),
            ),
            _scene({"mug": (0.35, 0.25, 0.35), "coffee_start_button": (0.62, -0.12, 0.65)}),
            60,
            "composite",
            {"obj": "mug", "obj_entity": "mug", "button_entity": "coffee_start_button"},
        )
    )
    t = "PreSoakPan"
    specs.append(
        TaskSpec(
            t,
            "presoak_pan",
            "pre-soak the pan in the sink",
            (
                grasp(f"{t}.grasp_pan", "pan", (0.35, 0.25, 0.35), "grasp the pan"),
                place(f"{t}.place_pan", "pan", (0.55, -0.20, 0.25), "place the pan in the sink"),
                grasp(f"{t}.grasp_sponge", "sponge", (0.30, -0.30, 0.35), "grasp the sponge"),
                place(f"{t}.place_sponge", "sponge", (0.55, -0.20, 0.31), "place the sponge in the pan"),
                pull(f"{t}.turn_handle", "sink_handle", (0.55, -0.38, 0.52), "turn the sink handle to turn on the sink", kind="turn"),
            ),
            _scene({"pan": (0.35, 0.25, 0.35), "sponge": (0.30, -0.30, 0.35), "sink_handle": (0.55, -0.38, 0.40)}),
            60,
            "composite",
            {"pan_entity": "pan", "sponge_entity": "sponge", "handle_entity": "sink_handle"},
        )
    )
    return specs


def catalog_by_id() -> dict[str, TaskSpec]:
    return {s.id: s for s in build_catalog()}
