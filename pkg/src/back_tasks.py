from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def run_parallel(task: Callable[[T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    """
    Выполняет независимые задачи (точки скана, испытания Монте-Карло)
    в пуле потоков

    Результаты всегда возвращаются в порядке items, поэтому итог
    не зависит от порядка фактического выполнения. numpy/scipy отпускают
    GIL в линейной алгебре, так что потоков достаточно

    Args:
        task: функция одной точки
        items: входные точки
        workers(int): размер пула; 1 - последовательное выполнение

    Returns:
        List: результаты в порядке входных точек
    """
    if workers <= 1 or len(items) <= 1:
        return [task(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, items))
