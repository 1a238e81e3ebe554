import torch

from relu_death.montecarlo.parallel import ThreadCap, map_trials, thread_capped


def test_map_trials_keeps_index_order():
    assert map_trials(lambda i: i * i, 50, threads=4) == [i * i for i in range(50)]
    assert map_trials(lambda i: i, 0, threads=4) == []


def test_thread_cap_restores_previous_setting():
    before = torch.get_num_threads()
    with ThreadCap(1):
        assert torch.get_num_threads() == 1
    assert torch.get_num_threads() == before


def test_thread_capped_applies_only_when_asked():
    @thread_capped
    def threads_inside(threads=None):
        return torch.get_num_threads()

    before = torch.get_num_threads()
    assert threads_inside(threads=1) == 1
    assert threads_inside() == before
