"""Deterministic synthetic corpora for fixtures, demos and benchmarks.

Nothing here is real vulnerability data.
"""

from __future__ import annotations

import random

from .severity import cvss_base_score, parse_vector

# Published per-vendor counts; vendor-less records make up the rest of the 110.
TABLE1_COUNTS = {
    "ABB": 61,
    "Fanuc": 6,
    "Robotics": 2,
    "Universal Robots": 5,
    "DDS vendors (eProsima, ADLINK, RTI)": 2,
    "Acutronic Robotics": 5,
    "Vecna": 6,
    "WowWee": 3,
    "UBTech Robotics": 3,
    "PAL Robotics": 1,
    "SoftBank Robotics": 4,
    "Rethink Robotics": 3,
    "Asratec": 1,
}
TABLE1_TOTAL = 110
TABLE1_UNKNOWN = TABLE1_TOTAL - sum(TABLE1_COUNTS.values())

# Fraction of each vendor's records carrying a CVSS score; 0.0 means all unscored.
_SCORED_FRACTION = {
    "ABB": 0.8,
    "Fanuc": 0.5,
    "Robotics": 0.0,
    "Universal Robots": 0.6,
    "DDS vendors (eProsima, ADLINK, RTI)": 1.0,
    "Acutronic Robotics": 1.0,
    "Vecna": 0.0,
    "WowWee": 0.0,
    "UBTech Robotics": 0.0,
    "PAL Robotics": 1.0,
    "SoftBank Robotics": 0.5,
    "Rethink Robotics": 0.0,
    "Asratec": 0.0,
    None: 0.25,
}

SAMPLE_VECTORS = (
    "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H",
    "CVSS:3.1/AV:N/AC:L/PR:L/UI:N/S:C/C:H/I:H/A:H",
    "CVSS:3.1/AV:A/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H",
    "CVSS:3.1/AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H",
    "CVSS:3.1/AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:N/A:N",
    "CVSS:3.1/AV:N/AC:L/PR:N/UI:R/S:C/C:L/I:L/A:N",
    "CVSS:3.1/AV:P/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H",
    "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:L/I:N/A:N",
    "CVSS:3.1/AV:L/AC:H/PR:H/UI:R/S:U/C:L/I:N/A:N",
    "CVSS:3.1/AV:P/AC:H/PR:H/UI:R/S:U/C:L/I:N/A:N",
)

_WEAKNESSES = (
    ("Buffer overflow", "CWE-120"), ("Use after free", "CWE-416"),
    ("Hardcoded credentials", "CWE-798"), ("Missing authentication", "CWE-306"),
    ("Cleartext transmission", "CWE-319"), ("Command injection", "CWE-78"),
    ("Path traversal", "CWE-22"), ("Integer overflow", "CWE-190"),
    ("Null pointer dereference", "CWE-476"), ("Race condition", "CWE-362"),
    ("Improper input validation", "CWE-20"), ("Denial of service", "CWE-400"),
    ("Weak cryptography", "CWE-327"), ("Privilege escalation", "CWE-269"),
)
_COMPONENTS = (
    "motion_planner", "teach-pendant", "ros_comm", "robot_state_publisher",
    "web_interface", "ftp_server", "controller_firmware", "safety_monitor",
    "gripper_driver", "vision-node", "nav_stack", "dds_discovery", "rviz_plugin",
    "joint_trajectory_controller", "update_service", "telnet_service",
    "bootloader", "camera_driver", "map_server", "tf2_buffer", "urcap-loader",
    "serial_bridge", "lidar_driver", "fleet-manager", "speech_module",
)
_FUNCTIONS = (
    "parser", "handler", "callback", "loader", "listener", "decoder",
    "scheduler", "serializer", "resolver", "dispatcher", "encoder", "allocator",
)
_SYSTEMS = (
    "IRC5", "OmniCore", "UR5e", "UR10", "Pepper", "NAO", "Baxter", "Sawyer",
    "TIAGo", "Alpha 2", "MiP", "R-30iB", "QC150", "ROS 2 Dashing", "MARA",
)
_KEYWORDS = (
    "ROS", "ROS 2", "DDS", "firmware", "network", "web", "authentication",
    "memory", "crypto", "robot arm", "mobile base", "humanoid", "controller",
    "OT", "bootloader", "FTP", "telnet", "update", "safety", "sensor",
)
_WORDS = (
    "attacker", "remote", "local", "robot", "controller", "packet", "message",
    "buffer", "memory", "heap", "stack", "length", "field", "header", "request",
    "response", "session", "token", "password", "credential", "service", "port",
    "socket", "thread", "lock", "timer", "queue", "topic", "node", "parameter",
    "configuration", "file", "path", "directory", "image", "firmware", "update",
    "signature", "certificate", "key", "cipher", "hash", "user", "operator",
    "pendant", "joint", "trajectory", "velocity", "torque", "sensor", "camera",
    "lidar", "map", "frame", "transform", "callback", "subscriber", "publisher",
    "crash", "overwrite", "leak", "disclose", "bypass", "escalate", "execute",
    "arbitrary", "code", "command", "shell", "input", "unchecked", "malformed",
    "crafted", "oversized", "negative", "integer", "pointer", "dereference",
    "freed", "reused", "uninitialized", "race", "window", "timeout", "loop",
    "exhaust", "resource", "denial", "availability", "integrity", "confidential",
    "plaintext", "network", "broadcast", "discovery", "endpoint", "vendor",
    "default", "hardcoded", "debug", "interface", "legacy", "protocol", "parser",
)


def _vector_and_score(rng: random.Random) -> tuple[str, float]:
    vec = rng.choice(SAMPLE_VECTORS)
    return vec, cvss_base_score(parse_vector(vec))


def make_record(rng: random.Random, rid: int, vendor: str | None,
                scored: bool) -> dict:
    weakness, cwe = rng.choice(_WEAKNESSES)
    component = rng.choice(_COMPONENTS)
    title = f"{weakness} in {component} {rng.choice(_FUNCTIONS)}"
    description = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(18, 30)))
    year = rng.randint(2015, 2020)
    cve = f"CVE-{year}-{rng.randint(1000, 39999)}" if rng.random() < 0.5 else "None"
    if scored:
        vector, score = _vector_and_score(rng)
        severity = {"rvss-score": "None", "rvss-vector": "", "severity-description": "",
                    "cvss-score": score, "cvss-vector": vector}
    else:
        severity = {"rvss-score": "None", "rvss-vector": "", "severity-description": "",
                    "cvss-score": "None", "cvss-vector": ""}
    month, day = rng.randint(1, 12), rng.randint(1, 28)
    return {
        "id": rid,
        "title": title,
        "type": rng.choice(("bug", "vulnerability", "vulnerability", "weakness", "exposure")),
        "description": description,
        "cwe": cwe,
        "cve": cve,
        "keywords": sorted(set(rng.sample(_KEYWORDS, rng.randint(1, 3)))),
        "system": rng.choice(_SYSTEMS),
        "vendor": vendor,
        "severity": severity,
        "links": [f"https://example.org/advisories/{rid}"],
        "flaw": {
            "phase": rng.choice(("runtime-operation", "runtime", "unknown", "testing")),
            "subsystem": rng.choice(("communication", "cognition", "actuation", "N/A")),
            "package": component,
            "languages": rng.choice(("C++", "Python", "None")),
            "date-detected": f"{year}-{month:02d}-{day:02d}",
            "detected-by": "Synthetic Generator",
            "detected-by-method": rng.choice(("testing dynamic", "testing static", "N/A")),
            "date-reported": f"{year}-{month:02d}-{day:02d}",
            "reported-by": "Synthetic Generator",
            "reported-by-relationship": "security researcher",
        },
        "exploitation": {"description": "", "exploitation-image": "",
                         "exploitation-vector": ""},
        "mitigation": {"description": "", "pull-request": ""},
    }


def table1_corpus(seed: int = 2020) -> list[dict]:
    """110 records whose vendor distribution reproduces the published table.

    Eight records have no vendor. Scored/unscored mix per vendor follows
    ``_SCORED_FRACTION`` so that several vendors are entirely unscored.
    """
    rng = random.Random(seed)
    vendors: list[str | None] = []
    for vendor, n in TABLE1_COUNTS.items():
        vendors += [vendor] * n
    vendors += [None] * TABLE1_UNKNOWN
    rng.shuffle(vendors)
    seen: dict = {}
    out = []
    for rid, vendor in enumerate(vendors):
        k = seen.get(vendor, 0)
        seen[vendor] = k + 1
        n = TABLE1_COUNTS[vendor] if vendor else TABLE1_UNKNOWN
        scored = k < round(_SCORED_FRACTION[vendor] * n)
        out.append(make_record(rng, rid, vendor, scored))
    return out


# --- planted duplicates -------------------------------------------------------

_PLANT_VENDORS = tuple(TABLE1_COUNTS) + ("Kuka", "Yaskawa", "Clearpath Robotics")


def _swap_tokens(rng: random.Random, text: str) -> str:
    words = text.split()
    if len(words) < 2:
        return text
    i = rng.randrange(len(words) - 1)
    words[i], words[i + 1] = words[i + 1], words[i]
    return " ".join(words)


def _swap_separators(text: str) -> str:
    if "_" in text or "-" in text:
        return text.translate(str.maketrans({"_": "-", "-": "_"}))
    return text.replace(" ", "_", 1)


def perturb(rng: random.Random, rec: dict, rid: int) -> dict:
    """Near-duplicate of ``rec``: token swap, hyphen/underscore swap, vendor recased."""
    dup = {k: (dict(v) if isinstance(v, dict) else v) for k, v in rec.items()}
    dup["id"] = rid
    dup["title"] = _swap_separators(_swap_tokens(rng, rec["title"]))
    dup["description"] = _swap_tokens(rng, rec["description"])
    dup["system"] = _swap_separators(rec["system"])
    if rec.get("vendor"):
        dup["vendor"] = rng.choice((str.upper, str.lower, str.swapcase))(rec["vendor"])
    return dup


def planted_corpus(n_records: int = 200, n_planted: int = 20,
                   seed: int = 7) -> tuple[list[dict], set[tuple[int, int]]]:
    """A corpus with ``n_planted`` near-duplicate pairs and the pairs themselves.

    Record ids are a random permutation, so planted pairs are not adjacent.
    """
    rng = random.Random(seed)
    n_base = n_records - n_planted
    ids = list(range(n_records))
    rng.shuffle(ids)
    base = []
    for i in range(n_base):
        vendor = rng.choice(_PLANT_VENDORS) if rng.random() < 0.9 else None
        base.append(make_record(rng, ids[i], vendor, scored=rng.random() < 0.5))
    plants = set()
    records = list(base)
    for j, src in enumerate(rng.sample(base, n_planted)):
        rid = ids[n_base + j]
        records.append(perturb(rng, src, rid))
        plants.add((min(src["id"], rid), max(src["id"], rid)))
    records.sort(key=lambda r: r["id"])
    return records, plants

