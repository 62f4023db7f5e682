import pytest

from rover.pipeline import label_video
from rover.trajgen.catalog import build_catalog
from rover.trajgen.dataset import generate_video, video_ids, video_seed
from rover.trajgen.levels import n_levels

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {status}  {detail}")


@pytest.fixture(scope="session")
def catalog():
    return build_catalog()


@pytest.fixture(scope="session")
def specs_by_id(catalog):
    return {s.id: s for s in catalog}


@pytest.fixture(scope="session")
def expert_videos(catalog):
    """One top-level (expert-like) video per task spec, with labels."""
    out = []
    for spec in catalog:
        level = n_levels(spec.task_group)
        vid = f"{spec.id}-L{level}-0"
        v = generate_video(spec, level, vid, video_seed(0, vid))
        out.append((v, label_video(v)))
    return out


@pytest.fixture(scope="session")
def level_videos(catalog):
    """First video of every (task, level) pair, with labels."""
    out = []
    for spec in catalog:
        for vid, level in video_ids(spec):
            if vid.endswith("-0"):
                v = generate_video(spec, level, vid, video_seed(0, vid))
                out.append((v, label_video(v)))
    return out


@pytest.fixture(scope="session")
def all_videos(catalog):
    out = []
    for spec in catalog:
        for vid, level in video_ids(spec):
            v = generate_video(spec, level, vid, video_seed(0, vid))
            out.append((v, label_video(v)))
    return out
