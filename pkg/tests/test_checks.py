from uniontight import checks


def test_all_groups_pass_at_default_trials():
    results = checks.run_all(trials=1500, seed=0)
    assert [r.status for r in results] == [checks.PASS] * len(results)
    assert [r.name for r in results] == [name for name, _ in checks.GROUPS]


def test_ci_groups_skip_on_tiny_trials():
    results = checks.run_all(trials=10, seed=0)
    by_name = {r.name: r.status for r in results}
    for ci_group in (
        "ensemble_moments",
        "ustat_binomial_k1",
        "ustat_exchangeability",
        "prop2_trace_moment",
    ):
        assert by_name[ci_group] == checks.SKIPPED
    assert by_name["poisson_algebra"] == checks.PASS
    assert checks.FAIL not in by_name.values()


def test_skip_detail_names_the_policy():
    results = {r.name: r for r in checks.run_all(trials=10, seed=0)}
    assert str(checks.MIN_CI_TRIALS) in results["ensemble_moments"].detail
