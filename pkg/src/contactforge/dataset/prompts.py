"""Hand-centered contact prompts and the deterministic labeling rules.

A prompt fixes the grasp action verb, a coarse grasp type, a per-finger
contact label, and a shape for each free finger. ``derive_prompt`` recovers
grasp type and per-finger labels from a posed hand via ground-truth contact,
using the rule tables below; grasp synthesis verifies itself against it.
"""

from dataclasses import dataclass, field

import numpy as np

from ..contact import ContactParams, ObjectModel, ground_truth_contact
from ..errors import InvalidInputError
from ..hand import FINGERS, SEGMENTS, HandPose, sample_hand_surface

GRASP_TYPES = ("wrap", "pinch", "lift", "twist")
CONTACT_LABELS = ("tip-contact", "pad-contact", "full-finger-contact", "free")
FREE_STATUSES = ("sphere", "full extension", "partial extension")
ACTIONS = ("hold", "use", "cut", "pour", "shake", "open", "pass", "press", "carry", "twist")

# Mean-flexion thresholds separating free-finger shapes (radians).
FULL_EXTENSION_MAX = 0.25
PARTIAL_EXTENSION_MAX = 0.9


@dataclass
class PromptAnnotation:
    action: str
    grasp_type: str
    per_finger: tuple  # 5 labels, thumb..pinky
    free_status: dict = field(default_factory=dict)  # finger name -> status, free fingers only

    def __post_init__(self):
        self.per_finger = tuple(self.per_finger)
        self.validate()

    def validate(self):
        if self.grasp_type not in GRASP_TYPES:
            raise InvalidInputError(f"unknown grasp type {self.grasp_type!r}")
        if len(self.per_finger) != 5:
            raise InvalidInputError("per_finger must have exactly 5 entries (thumb..pinky)")
        for lab in self.per_finger:
            if lab not in CONTACT_LABELS:
                raise InvalidInputError(f"unknown contact label {lab!r}")
        free = {FINGERS[i] for i, lab in enumerate(self.per_finger) if lab == "free"}
        if set(self.free_status) != free:
            raise InvalidInputError("free_status must cover exactly the free fingers")
        for status in self.free_status.values():
            if status not in FREE_STATUSES:
                raise InvalidInputError(f"unknown free status {status!r}")

    def contacting(self) -> list[str]:
        return [FINGERS[i] for i, lab in enumerate(self.per_finger) if lab != "free"]

    def label(self, finger: str) -> str:
        return self.per_finger[FINGERS.index(finger)]

    def as_dict(self) -> dict:
        return {
            "action": self.action,
            "grasp_type": self.grasp_type,
            "per_finger": list(self.per_finger),
            "free_status": dict(self.free_status),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PromptAnnotation":
        return cls(d["action"], d["grasp_type"], tuple(d["per_finger"]), dict(d.get("free_status", {})))


def classify_finger(touching: set) -> str:
    """Contact label from the set of touching segments of one finger."""
    if not touching:
        return "free"
    if len(touching) >= 2:
        return "full-finger-contact"
    return "tip-contact" if "distal" in touching else "pad-contact"


def classify_grasp(per_finger: tuple, palm_touching: bool) -> str:
    contacting = [FINGERS[i] for i, lab in enumerate(per_finger) if lab != "free"]
    if len(contacting) == 5:
        return "wrap"
    if "thumb" in contacting and 1 <= len(contacting) - 1 <= 2:
        return "pinch"
    if palm_touching and len(contacting) >= 3:
        return "lift"
    return "twist"


def classify_free_shape(flexions: np.ndarray) -> str:
    mean_flex = float(np.mean(flexions))
    if mean_flex < FULL_EXTENSION_MAX:
        return "full extension"
    if mean_flex < PARTIAL_EXTENSION_MAX:
        return "partial extension"
    return "sphere"


def derive_prompt(pose: HandPose, obj: ObjectModel, params: ContactParams | None = None,
                  action: str = "hold") -> PromptAnnotation:
    """Recover the prompt annotation implied by a posed hand on an object."""
    surf = sample_hand_surface(pose)
    gt = ground_truth_contact(surf, obj, params)
    mask = gt.hand_values.detach().numpy() > 0.5

    per_finger = []
    for f, name in enumerate(FINGERS):
        touching = {
            seg for seg in SEGMENTS
            if bool(mask[surf.mask(fingers=[name], segments=[seg])].any())
        }
        per_finger.append(classify_finger(touching))
    per_finger = tuple(per_finger)

    palm_touching = bool(mask[surf.mask(fingers=["palm"])].any())
    grasp_type = classify_grasp(per_finger, palm_touching)

    theta = pose.theta.detach().numpy()
    free_status = {}
    for f, name in enumerate(FINGERS):
        if per_finger[f] == "free":
            flexions = theta[[3 * (3 * f), 3 * (3 * f + 1), 3 * (3 * f + 2)]]
            free_status[name] = classify_free_shape(flexions)
    return PromptAnnotation(action, grasp_type, per_finger, free_status)


def sample_prompt(rng: np.random.Generator) -> PromptAnnotation:
    """Draw a consistent (grasp_type, per_finger, free_status) combination.

    Only combinations the rule table maps back to the same grasp type are
    produced, so synthesized grasps can round-trip.
    """
    grasp_type = str(rng.choice(GRASP_TYPES, p=[0.3, 0.3, 0.2, 0.2]))
    labels = {}
    if grasp_type == "wrap":
        for name in FINGERS:
            labels[name] = "full-finger-contact"
    elif grasp_type == "pinch":
        labels = {name: "free" for name in FINGERS}
        labels["thumb"] = "tip-contact"
        labels["index"] = "tip-contact"
        if rng.random() < 0.4:
            labels["middle"] = "tip-contact"
    elif grasp_type == "lift":
        labels = {name: "full-finger-contact" for name in FINGERS}
        labels["thumb"] = "free"
    else:  # twist: fingertip turns without the thumb, palm off the object
        labels = {name: "free" for name in FINGERS}
        labels["index"] = "tip-contact"
        labels["middle"] = "tip-contact"
        if rng.random() < 0.4:
            labels["ring"] = "tip-contact"

    free_status = {
        name: str(rng.choice(FREE_STATUSES, p=[0.5, 0.2, 0.3]))
        for name in FINGERS
        if labels[name] == "free"
    }
    if grasp_type == "lift":
        # an opposed curled thumb would sweep into the palm-held object
        free_status["thumb"] = str(rng.choice(["full extension", "partial extension"], p=[0.6, 0.4]))
    action = str(rng.choice(ACTIONS))
    return PromptAnnotation(action, grasp_type, tuple(labels[n] for n in FINGERS), free_status)
