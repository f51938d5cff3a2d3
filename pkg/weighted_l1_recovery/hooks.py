app_name = "weighted_l1_recovery"
app_title = "Weighted L1 Recovery"
app_publisher = "Weighted L1 Recovery contributors"
app_description = "Weighted l1 recovery of non-uniformly sparse signals and their weak thresholds"
app_license = "mit"

# Command line
# ------------
# Subcommand name -> handler. Handlers take (args) and return an exit code.

commands = {
	"recover": "weighted_l1_recovery.api.commands.recover",
	"simulate": "weighted_l1_recovery.api.commands.simulate",
	"threshold": "weighted_l1_recovery.api.commands.threshold",
	"weights": "weighted_l1_recovery.api.commands.weights",
	"surface": "weighted_l1_recovery.api.commands.surface",
	"angles": "weighted_l1_recovery.api.commands.angles",
}

# Fixtures
# --------
# Named experiment plans shipped with the package, usable as `simulate --plan <name>`.

fixtures = {
	"two_class_sweep": "fixtures/two_class_sweep_plan.json",
	"dense_second_class": "fixtures/dense_second_class_plan.json",
}
