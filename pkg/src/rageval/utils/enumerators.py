from enum import Enum


class ContextEnum(Enum):
    CONFIG = "config"
    SETTINGS = "settings"


class Dimension(Enum):
    FAITHFULNESS = "faithfulness"
    ANSWER_RELEVANCE = "answer_relevance"
    CONTEXT_RELEVANCE = "context_relevance"

    @property
    def label(self) -> str:
        return {
            Dimension.FAITHFULNESS: "Faith.",
            Dimension.ANSWER_RELEVANCE: "Ans. Rel.",
            Dimension.CONTEXT_RELEVANCE: "Cont. Rel.",
        }[self]


class Method(Enum):
    RAGAS = "ragas"
    GPT_SCORE = "gpt-score"
    GPT_RANKING = "gpt-ranking"

    @property
    def label(self) -> str:
        return {
            Method.RAGAS: "RAGAs",
            Method.GPT_SCORE: "GPT Score",
            Method.GPT_RANKING: "GPT Ranking",
        }[self]

    @classmethod
    def parse_list(cls, raw: str) -> list["Method"]:
        """Parses a comma-separated method list such as 'ragas,gpt-score'."""
        methods: list[Method] = []
        for item in raw.split(","):
            item = item.strip().lower()
            if not item:
                continue
            method = cls(item)
            if method not in methods:
                methods.append(method)
        return methods


class SentenceSplitter(Enum):
    RULE_BASED = "rule-based"


class Preference(Enum):
    A = "A"
    B = "B"


class LabelSource(Enum):
    HUMAN = "human"
    CONSTRUCTION = "construction-implied"


class ReportFormat(Enum):
    JSON = "json"
    CSV = "csv"
    MARKDOWN = "md"

    @classmethod
    def parse_list(cls, raw: str) -> list["ReportFormat"]:
        formats: list[ReportFormat] = []
        for item in raw.split(","):
            item = item.strip().lower()
            if item == "markdown":
                item = "md"
            if item and cls(item) not in formats:
                formats.append(cls(item))
        return formats


class Role(Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"
