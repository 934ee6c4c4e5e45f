"""Re-record tests/fixtures/replay/cache after editing templates or canned replies.

    python3 tests/fixtures/record_fixtures.py
"""

import shutil
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from fakes import CACHE_DIR, record_all  # noqa: E402

if __name__ == "__main__":
    shutil.rmtree(CACHE_DIR, ignore_errors=True)
    canned = record_all(CACHE_DIR)
    print(f"recorded {len(canned.requests)} completions into {CACHE_DIR}")
