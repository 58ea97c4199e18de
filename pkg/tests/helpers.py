"""
Shared bits of the test suites
"""
import os
import sys
from typing import Callable, Iterable

from loguru import logger

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)


def run_suite(title: str, tests: Iterable[Callable[[], None]]) -> bool:
    """Run plain test functions, log one line per test, return True if all passed"""
    logger.info("\n" + "=" * 60)
    logger.info(f"  {title}")
    logger.info("=" * 60)
    results = {}
    for test in tests:
        try:
            test()
            results[test.__name__] = True
            logger.info(f"✅ {test.__name__}")
        except Exception as e:
            results[test.__name__] = False
            logger.error(f"❌ {test.__name__}: {type(e).__name__}: {e}")
    passed = sum(results.values())
    logger.info(f"{title}: {passed}/{len(results)} passed")
    return passed == len(results)


def module_tests(namespace: dict) -> list:
    """test_* functions of a module namespace in definition order"""
    return [fn for name, fn in namespace.items() if name.startswith("test_") and callable(fn)]
