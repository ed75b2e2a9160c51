from abc import ABC, abstractmethod
from typing import Any


class Writer(ABC):
    """Sink for run artifacts; closing flushes whatever the writer buffered."""

    def __enter__(self):
        return self

    def __exit__(self, *args, **kwargs):
        self.close()

    @abstractmethod
    def write(self, record: Any):
        raise NotImplementedError

    @abstractmethod
    def close(self):
        raise NotImplementedError
