"""Session fixtures: tiny randomly initialized checkpoints and a question file.

The models are deliberately useless at QA; the suite checks the dump
mechanics (schemas, offsets, beam bookkeeping, determinism), not answer
quality. Everything is built locally so no network access is needed.
"""

import json
import string

import pytest
import torch
from tokenizers import BertWordPieceTokenizer, ByteLevelBPETokenizer
from transformers import (BertConfig, BertForQuestionAnswering, BertModel,
                          BertTokenizerFast, GPT2Config, GPT2LMHeadModel,
                          PreTrainedTokenizerFast)
from transformers.utils import logging as hf_logging

# Keep checkpoint load/save progress bars off stderr so the CLI tests can
# assert on exact stream contents.
hf_logging.disable_progress_bar()

CITIES = ["Paris", "Rome", "Oslo", "Cairo", "Lima", "Quito", "Kyoto", "Delhi",
          "Dakar", "Hanoi", "Sofia", "Accra", "Tunis", "Seoul", "Osaka",
          "Turin", "Genoa", "Leeds", "Perth", "Bonn"]
THINGS = ["tower", "bridge", "museum", "castle", "library", "stadium",
          "harbor", "market", "temple", "palace", "garden", "station",
          "theater", "fortress", "academy", "archive", "foundry", "granary",
          "lighthouse", "observatory"]


def question_rows():
    rows = []
    for i, (thing, city) in enumerate(zip(THINGS, CITIES)):
        context = f"The {thing} stands in {city} near the old river."
        rows.append({
            "qid": f"q{i:04d}",
            "language": "en",
            "question": f"Where does the {thing} stand?",
            "context": context,
            "answers": [city],
            "answer_start": context.index(city),
        })
    return rows


@pytest.fixture(scope="session")
def qa_rows():
    return question_rows()


@pytest.fixture(scope="session")
def qa_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "geo20.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for row in question_rows():
            fh.write(json.dumps(row) + "\n")
    return str(path)


def _char_vocab():
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    for ch in sorted(set(string.ascii_letters + string.digits
                         + string.punctuation)):
        vocab.append(ch)
        vocab.append("##" + ch)
    return vocab


def _char_tokenizer(directory):
    # Constructing the fast tokenizer straight from vocab.txt leaves the
    # backend holding nothing but special tokens, so build it explicitly
    # and go through tokenizer.json.
    vocab = _char_vocab()
    vocab_file = directory / "vocab.txt"
    vocab_file.write_text("\n".join(vocab) + "\n", encoding="utf-8")
    backend = BertWordPieceTokenizer(vocab={t: i for i, t in enumerate(vocab)},
                                     lowercase=False)
    backend.save(str(directory / "tokenizer.json"))
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file),
                                  tokenizer_file=str(directory / "tokenizer.json"),
                                  do_lower_case=False)
    return tokenizer, len(vocab)


def _bert_config(vocab_size):
    return BertConfig(vocab_size=vocab_size, hidden_size=32,
                      num_hidden_layers=2, num_attention_heads=2,
                      intermediate_size=64, max_position_embeddings=192)


@pytest.fixture(scope="session")
def extractive_checkpoint(tmp_path_factory):
    directory = tmp_path_factory.mktemp("ext_model")
    tokenizer, vocab_size = _char_tokenizer(directory)
    torch.manual_seed(0)
    model = BertForQuestionAnswering(_bert_config(vocab_size))
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return str(directory)


@pytest.fixture(scope="session")
def encoder_checkpoint(tmp_path_factory):
    directory = tmp_path_factory.mktemp("enc_model")
    tokenizer, vocab_size = _char_tokenizer(directory)
    torch.manual_seed(3)
    model = BertModel(_bert_config(vocab_size))
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return str(directory)


@pytest.fixture(scope="session")
def generative_checkpoint(tmp_path_factory):
    directory = tmp_path_factory.mktemp("gen_model")
    corpus = [f"{row['question']} {row['context']} Answer: {row['answers'][0]}"
              for row in question_rows()]
    corpus.append("### Question:\n### Context:\n### Answer:\n")
    bpe = ByteLevelBPETokenizer()
    bpe.train_from_iterator(corpus, vocab_size=400, min_frequency=1,
                            special_tokens=["<|endoftext|>"])
    tokenizer_file = directory / "tokenizer.json"
    bpe.save(str(tokenizer_file))
    tokenizer = PreTrainedTokenizerFast(tokenizer_file=str(tokenizer_file),
                                        eos_token="<|endoftext|>",
                                        pad_token="<|endoftext|>")
    torch.manual_seed(1)
    model = GPT2LMHeadModel(GPT2Config(
        vocab_size=len(tokenizer), n_embd=32, n_layer=2, n_head=2,
        n_positions=256, bos_token_id=tokenizer.eos_token_id,
        eos_token_id=tokenizer.eos_token_id))
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return str(directory)
