"""Built-in prompt sets.

``DEFAULT_PROMPTS`` is the 25-prompt dataset manifest (5 prompts for each
of 5 object classes).  ``DIVERSITY_PROMPTS`` are the 10 scene prompts used
by the positional-diversity study, each tagged with its salient object.
``GUIDANCE_PROMPTS`` carry an explicit left/right instruction and drive
the prompt-following study.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Prompt:
    prompt_id: str
    text: str
    class_name: str
    side: str | None = None  # "left"/"right" for guidance prompts


_DATASET = [
    ("baseball glove", [
        "The baseball glove waits by the fence.",
        "A young athlete breaks in a new baseball glove.",
        "A baseball glove rests on the dugout bench.",
        "His baseball glove hangs by the door.",
        "A baseball glove is left on the fence during practice.",
    ]),
    ("bear", [
        "A grizzly bear fishes in a rushing river.",
        "A bear cub explores the forest with curiosity.",
        "A bear catches a fish in the river.",
        "A black bear forages for berries in the woods.",
        "A bear sniffs the forest floor.",
    ]),
    ("handbag", [
        "A fashionable handbag complements an elegant outfit.",
        "A woman carries a stylish handbag on her shoulder.",
        "A handbag rests on a cafe table during lunch.",
        "A handbag holds essentials for a day of shopping.",
        "A handbag adds a pop of color to a monochrome look.",
    ]),
    ("sports ball", [
        "A sports ball is caught in a fence.",
        "A sports ball lies forgotten under a tree.",
        "A sports ball sits on a sandy beach.",
        "A sports ball rests on a grassy land.",
        "A sports ball stands out on a muddy field.",
    ]),
    ("stop sign", [
        "A red stop sign halts traffic at an intersection.",
        "A stop sign stands alone on a country road.",
        "A stop sign is covered in a layer of snow.",
        "A stop sign is adorned with event flyers.",
        "A stop sign stands at the entrance to a neighborhood.",
    ]),
]

DEFAULT_PROMPTS: tuple[Prompt, ...] = tuple(
    Prompt(
        prompt_id=f"{cls.replace(' ', '_')}_{i}",
        text=text,
        class_name=cls,
    )
    for cls, texts in _DATASET
    for i, text in enumerate(texts)
)

_DIVERSITY = [
    ("forest", "The golden sunlight filters through the dense canopy of the "
               "forest, casting dappled shadows on the moss-covered ground."),
    ("bicycle", "A red bicycle leans against a gnarled oak tree, its wheels "
                "slightly caked with mud from the morning's ride."),
    ("picnic table", "Nearby, a picnic table is set with a checkered cloth, and "
                     "atop it rests a basket filled with fresh fruit and sandwiches."),
    ("frisbee", "A frisbee lies forgotten on the grass, a few feet away from a "
                "sleeping dog with its fur glistening in the sun."),
    ("kite", "In the background, a kite dances in the sky, its bright colors a "
             "stark contrast against the blue expanse above."),
    ("laptop", "A laptop is open on the table, displaying vibrant images of "
               "nature, momentarily abandoned for the allure of the outdoors."),
    ("baseball glove", "A baseball glove and ball sit on the bench, remnants of "
                       "a game played in the spirit of friendly competition."),
    ("traffic cone", "A traffic cone marks the end of a nearby trail, signaling "
                     "caution to the cyclists and hikers passing by."),
    ("fire hydrant", "A fire hydrant stands at the edge of the clearing, its red "
                     "paint chipped but vibrant, a silent guardian of safety."),
    ("street light", "As the day wanes, the street lights begin to flicker on, "
                     "their glow adding a soft luminescence to the tranquil scene."),
]

DIVERSITY_PROMPTS: tuple[Prompt, ...] = tuple(
    Prompt(prompt_id=f"diversity_{i}", text=text, class_name=cls)
    for i, (cls, text) in enumerate(_DIVERSITY)
)

_GUIDANCE_CLASSES = ["sports ball", "cow", "apple", "bicycle", "vase"]

GUIDANCE_PROMPTS: tuple[Prompt, ...] = tuple(
    Prompt(
        prompt_id=f"{cls.replace(' ', '_')}_{side}",
        text=f"a {cls} in the {side}",
        class_name=cls,
        side=side,
    )
    for side in ("left", "right")
    for cls in _GUIDANCE_CLASSES
)


def guidance_prompts(side: str) -> tuple[Prompt, ...]:
    return tuple(p for p in GUIDANCE_PROMPTS if p.side == side)
