from muskat.infrastructure.monitoring import InMemoryRunMonitor, RunMonitorProtocol, RunStatus


def test_monitor_counts_steps_and_rejections():
    monitor = InMemoryRunMonitor()
    monitor.start_run("constant-N32")
    monitor.record_step(0.01, 0.01)
    monitor.record_step(0.015, 0.005)
    monitor.record_rejection(0.015, 0.02, "error")
    monitor.record_rejection(0.015, 0.01, "undershoot")
    monitor.record_rejection(0.015, 0.01, "error")
    stats = monitor.get_stats()
    assert stats["steps_accepted"] == 2
    assert stats["steps_rejected"] == 3
    assert stats["rejections_by_reason"] == {"error": 2, "undershoot": 1}
    assert stats["dt_min_accepted"] == 0.005
    assert stats["dt_max_accepted"] == 0.01


def test_monitor_accumulates_clamps():
    monitor = InMemoryRunMonitor()
    monitor.record_clamp(0.1, 2, 1e-12)
    monitor.record_clamp(0.2, 1, 3e-12)
    stats = monitor.get_stats()
    assert stats["clamp_events"] == 2
    assert stats["clamped_samples"] == 3
    assert abs(stats["clamp_mass"] - 4e-12) < 1e-24


def test_monitor_finish_records_termination():
    monitor = InMemoryRunMonitor()
    assert monitor.get_stats()["termination"] is None
    monitor.finish_run("completed", 1.0)
    assert monitor.run is None
    monitor.start_run("r")
    monitor.finish_run("BlowupSuspected", 0.4)
    assert monitor.run.status is RunStatus.FINISHED
    assert monitor.run.t_final == 0.4
    assert monitor.get_stats()["termination"] == "BlowupSuspected"


def test_in_memory_monitor_satisfies_protocol():
    monitor: RunMonitorProtocol = InMemoryRunMonitor()
    monitor.start_run("r")
    assert monitor.get_stats()["steps_accepted"] == 0
