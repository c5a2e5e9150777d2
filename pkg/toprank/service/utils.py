from typing import List


def singleton(cls):
    instances = {}

    def getinstance():
        if cls not in instances:
            instances[cls] = cls()
        return instances[cls]

    def reset():
        instances.pop(cls, None)

    getinstance.reset = reset
    return getinstance


def split_list(entry: str) -> List[str]:
    return [e.strip() for e in entry.split(",") if e.strip() != ""]
