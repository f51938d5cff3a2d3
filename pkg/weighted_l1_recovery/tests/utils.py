import os
import unittest

from weighted_l1_recovery.config import SETTINGS_ENV, clear_settings_cache

SLOW_ENV = "WEIGHTED_L1_SLOW"


def slow(test):
	"""Skip unless $WEIGHTED_L1_SLOW is set; for full-size acceptance runs."""
	return unittest.skipUnless(os.environ.get(SLOW_ENV), f"set {SLOW_ENV}=1 to run")(test)


class ToolkitTestCase(unittest.TestCase):
	"""Base class for toolkit tests: every test starts from default settings."""

	def setUp(self):
		self._settings_env = os.environ.pop(SETTINGS_ENV, None)
		clear_settings_cache()

	def tearDown(self):
		if self._settings_env is not None:
			os.environ[SETTINGS_ENV] = self._settings_env
		clear_settings_cache()
