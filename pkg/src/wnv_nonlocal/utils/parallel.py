# Run independent computations in parallel with ray while keeping a bounded number in flight

import ray


def schedule_runs(func, tasks, max_concurrent=4, parallel=True):
    """
    Schedule `func(*task)` for every task, with at most `max_concurrent` running at once.

    Results come back in task order regardless of completion order. With `parallel=False` the
    tasks run sequentially in this process.

    Note: ray is initialised on demand (`ray.init()`) when no cluster is running; start one
    beforehand to control `num_cpus`.

    Parameters
    ----------
    func : function
        A plain (not remote) function; it is wrapped with `ray.remote` here.
    tasks : list of tuples
        Positional arguments for each call.
    max_concurrent : int
        Maximum number of tasks to submit at once (default: 4).
    parallel : bool
        Use ray (default) or run sequentially.

    Returns
    -------
    list
        The output of `func` for each task.
    """
    if not parallel or len(tasks) <= 1:
        return [func(*task) for task in tasks]

    if max_concurrent < 1:
        raise ValueError("max_concurrent must be at least 1.")

    if not ray.is_initialized():
        ray.init()

    remote_func = ray.remote(func)
    results = [None] * len(tasks)
    ref_index = {}
    running = []

    # schedule the first max_concurrent tasks
    n_initial_tasks = min(len(tasks), max_concurrent)

    for i in range(n_initial_tasks):
        ref = remote_func.remote(*tasks[i])
        ref_index[ref] = i
        running.append(ref)

    task_index = n_initial_tasks - 1
    n_done = 0

    # Replace each finished task with the next pending one
    while running:
        ready_refs, running = ray.wait(running, num_returns=1)

        for ref in ready_refs:
            results[ref_index.pop(ref)] = ray.get(ref)
            n_done += 1

            if task_index < len(tasks) - 1:
                task_index += 1
                new_ref = remote_func.remote(*tasks[task_index])
                ref_index[new_ref] = task_index
                running.append(new_ref)

        print(f"{n_done} of {len(tasks)} runs done", end="\r")

    return results
