import asyncio
import concurrent.futures
import traceback
import zlib
from dataclasses import dataclass, field
from textwrap import indent
from typing import Any, Callable, Iterable, List, Optional

from toprank.service.log import logger


@dataclass
class WorkItem:
    priority: int
    func: Callable[..., Any]
    args: List[Any]
    description: str
    error_msg: str = field(init=False)
    result: Any = field(init=False)
    _running: bool = field(init=False)

    def __post_init__(self):
        self._running = False
        self.error_msg = ""
        self.result = None

    def is_running(self) -> bool:
        return self._running

    def is_error(self) -> bool:
        return self.error_msg != ""

    async def run(self, executor: concurrent.futures.Executor):
        self._running = True
        try:
            loop = asyncio.get_running_loop()
            self.result = await loop.run_in_executor(executor, self.func, *self.args)
        finally:
            self._running = False
        return self.result

    def __hash__(self) -> int:
        return zlib.crc32(self.description.encode())

    def format_hash(self) -> str:
        return f"{hash(self):08x}"

    def __str__(self) -> str:
        ret = f"[{self.format_hash()}] {self.priority} - {self.description}"
        if self.is_running():
            ret += " [running]"
        if self.is_error():
            ret += "\n" + indent(self.error_msg, "\t")
        return ret


class WorkList(List[WorkItem]):
    """Trials waiting to run. Failed items stay in the list with `error_msg` set."""

    def __init__(
        self,
        items: Iterable[WorkItem] = (),
        callback: Optional[Callable[[WorkItem], None]] = None,
    ):
        super().__init__(items)
        self.callback = callback or (lambda item: None)
        self.completed: List[WorkItem] = []

    def get_top(self) -> Optional[WorkItem]:
        pending = sorted(
            [i for i in self if not i.is_error() and not i.is_running()],
            key=lambda i: i.priority,
        )
        if len(pending) == 0:
            return None
        return pending[0]

    async def worker(self, executor: concurrent.futures.Executor):
        while True:
            item = self.get_top()
            if item is None:
                return

            description = item.description
            logger.debug(f"starting {description}")
            # claim before yielding so sibling workers skip it
            item._running = True
            try:
                await item.run(executor)
            except Exception as e:
                item.error_msg = f"{e} {traceback.format_exc()}"
                logger.critical(f"Failed: {item}")
                continue

            self.remove(item)
            self.completed.append(item)
            self.callback(item)

    async def run(self, workers: int = 1):
        if workers > 1:
            executor = concurrent.futures.ProcessPoolExecutor(max_workers=workers)
        else:
            executor = concurrent.futures.ThreadPoolExecutor(max_workers=1)
        with executor:
            await asyncio.gather(*(self.worker(executor) for _ in range(workers)))
