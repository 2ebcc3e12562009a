import random

import pytest

from pieceattack.generator import make_context_count_generator
from pieceattack.tokenizer import train_vocabulary
from pieceattack.victim import LabeledExample, train_toy_victim

# Word pools for the synthetic desk-scale task.  Class keywords are the only
# tokens that differ between the two classes; contexts are shared so the
# context-count generator proposes cross-class swaps.
SPORT_WORDS = ["足球", "篮球", "网球", "排球", "游泳", "滑雪"]
FINANCE_WORDS = ["股票", "基金", "债券", "外汇", "证券", "黄金"]
PREFIXES = ["我们", "今天", "大家", "他们", "许多人", "朋友们"]
VERBS = ["非常喜欢", "正在讨论", "一起研究", "经常关注", "认真学习"]
SUFFIXES = ["的新闻", "的话题", "相关内容", "最新动态", "的知识"]
FILLERS = ["昨天", "上午", "因为", "所以", "然后", "觉得", "真的", "可以",
           "已经", "不过", "而且", "希望", "开始", "结束", "时间", "地方"]


def make_sentence(rng, keyword):
    parts = [rng.choice(PREFIXES), rng.choice(VERBS), keyword, rng.choice(SUFFIXES)]
    if rng.random() < 0.5:
        parts.insert(0, rng.choice(FILLERS))
    return "".join(parts) + rng.choice(["。", "！"])


def make_task_dataset(n, seed):
    rng = random.Random(seed)
    examples = []
    for _ in range(n):
        label = rng.randrange(2)
        kw = rng.choice(SPORT_WORDS if label == 0 else FINANCE_WORDS)
        examples.append(LabeledExample(text=make_sentence(rng, kw), label=label))
    return examples


def make_mixed_corpus(n, seed):
    """Mixed Chinese lines: task-style sentences plus ascii/digit noise."""
    rng = random.Random(seed)
    extras = ["2023年", "NBA", "GDP", "100元", "3.5%", "app"]
    lines = []
    for _ in range(n):
        kw = rng.choice(SPORT_WORDS + FINANCE_WORDS)
        line = make_sentence(rng, kw)
        if rng.random() < 0.3:
            line = rng.choice(extras) + line
        lines.append(line)
    return lines


@pytest.fixture(scope="session")
def desk_corpus():
    return make_mixed_corpus(1000, seed=7)


@pytest.fixture(scope="session")
def desk_vocab(desk_corpus):
    return train_vocabulary(desk_corpus[:400], target_size=180, seed_size=400)


@pytest.fixture(scope="session")
def task_train():
    return make_task_dataset(500, seed=11)


@pytest.fixture(scope="session")
def task_attack_samples():
    return make_task_dataset(200, seed=23)


@pytest.fixture(scope="session")
def task_vocab(task_train):
    lines = [ex.text for ex in task_train]
    return train_vocabulary(lines, target_size=160, seed_size=400)


@pytest.fixture(scope="session")
def task_victim(task_train, task_vocab):
    return train_toy_victim(task_train, task_vocab, epochs=150, learning_rate=0.5)


@pytest.fixture(scope="session")
def task_generator(task_train, task_vocab):
    return make_context_count_generator([ex.text for ex in task_train], task_vocab)
