#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "seek/corpus.hpp"
#include "seek/rng.hpp"

using namespace seek;

namespace {

std::string temp_file(const std::string& stem, const std::string& content) {
    std::string path = (std::filesystem::temp_directory_path() / stem).string();
    std::ofstream os(path);
    os << content;
    return path;
}

Dialogue make_dialogue(std::vector<std::string> texts) {
    Dialogue d;
    d.id = "d";
    for (std::size_t i = 0; i < texts.size(); ++i)
        d.utterances.push_back({std::move(texts[i]), i % 2 == 0 ? Role::Speaker : Role::Listener, 0});
    return d;
}

} // namespace

TEST_CASE("label tables are fixed and alphabetical") {
    CHECK(emotion_labels().size() == 32);
    CHECK(tag_labels().size() == 41);
    CHECK(std::is_sorted(emotion_labels().begin(), emotion_labels().end()));
    CHECK(std::is_sorted(tag_labels().begin(), tag_labels().end()));
    // every emotion also appears in the tag space
    for (const std::string& e : emotion_labels()) CHECK_NOTHROW(tag_id(e));
    CHECK(emotion_id("afraid") == 0);
    CHECK(emotion_id("trusting") == 31);
    CHECK_NOTHROW(tag_id("questioning"));
    CHECK_NOTHROW(tag_id("sympathizing"));
    CHECK_THROWS_WITH_AS(emotion_id("bored"), doctest::Contains("LabelOutOfRange"), Error);
}

TEST_CASE("tokenizer lowercases, detaches punctuation, splits on whitespace") {
    CHECK(tokenize_text("I am HAPPY!") == std::vector<std::string>{"i", "am", "happy", "!"});
    CHECK(tokenize_text("don't  stop") == std::vector<std::string>{"don", "'", "t", "stop"});
    CHECK(tokenize_text("  ") == std::vector<std::string>{});
    CHECK(tokenize_text("a,b") == std::vector<std::string>{"a", ",", "b"});
}

TEST_CASE("vocabulary from a tiny corpus") {
    // both orderings of the same token multiset
    Dialogue d = make_dialogue({"i i", "am"});

    SUBCASE("min_freq 1 indexes both tokens") {
        Vocabulary v = build_vocab({d}, 1);
        CHECK(v.size() == 7); // 5 specials + i + am
        CHECK(v.id("i") == 5);
        CHECK(v.id("am") == 6);
        CHECK(v.token(5) == "i");
    }

    SUBCASE("min_freq 2 drops the singleton") {
        Vocabulary v = build_vocab({d}, 2);
        CHECK(v.size() == 6);
        CHECK(v.id("i") == 5);
        CHECK(v.id("am") == Vocabulary::kUnk);
    }

    SUBCASE("frequencies count response occurrences only, floored at one") {
        Dialogue d2 = make_dialogue({"hello there", "i i"});
        Vocabulary v = build_vocab({d2}, 1);
        CHECK(v.frequency(v.id("i")) == 2);
        CHECK(v.frequency(v.id("hello")) == 1); // context-only token gets the floor
        CHECK(v.frequency(Vocabulary::kPad) == 1);
    }

    SUBCASE("assignment is deterministic") {
        Vocabulary a = build_vocab({d}, 1);
        Vocabulary b = build_vocab({d}, 1);
        CHECK(a.indexed_tokens() == b.indexed_tokens());
        CHECK(a.indexed_freqs() == b.indexed_freqs());
    }

    CHECK_THROWS_AS(build_vocab({d}, 0), Error);
}

TEST_CASE("utterance tokenization prepends CLS and truncates") {
    Vocabulary v = build_vocab({make_dialogue({"i am", "i am"})}, 1);

    TokenSeq seq = tokenize_utterance("i am", v, 16);
    CHECK(seq.ids == std::vector<int>{Vocabulary::kCls, v.id("i"), v.id("am")});
    CHECK(seq.mask == std::vector<bool>{true, true, true});

    TokenSeq unk = tokenize_utterance("zzz", v, 16);
    CHECK(unk.ids == std::vector<int>{Vocabulary::kCls, Vocabulary::kUnk});

    std::string long_text;
    for (int i = 0; i < 100; ++i) long_text += "i ";
    TokenSeq trunc = tokenize_utterance(long_text, v, 16);
    CHECK(trunc.ids.size() == 16);
    CHECK(trunc.ids[0] == Vocabulary::kCls);
    CHECK(trunc.mask == std::vector<bool>(16, true));

    CHECK_THROWS_WITH_AS(tokenize_utterance(" !", v, 1), doctest::Contains("BadFlag"), Error);
    CHECK_THROWS_WITH_AS(tokenize_utterance("  ", v, 16), doctest::Contains("EmptyText"), Error);
}

TEST_CASE("padding extends ids with PAD and mask with false") {
    Vocabulary v;
    TokenSeq seq = tokenize_utterance("zzz", v, 8);
    TokenSeq padded = pad_to(seq, 5);
    CHECK(padded.ids == std::vector<int>{Vocabulary::kCls, Vocabulary::kUnk, Vocabulary::kPad,
                                         Vocabulary::kPad, Vocabulary::kPad});
    CHECK(padded.mask == std::vector<bool>{true, true, false, false, false});
    CHECK_THROWS_AS(pad_to(padded, 3), Error);
}

TEST_CASE("dialogue state ids alternate with the roles") {
    Dialogue d3 = make_dialogue({"a", "b", "c", "d"}); // 3 context turns + response
    CHECK(dialogue_state_ids(d3) == std::vector<int>{0, 1, 0});
    Dialogue d1 = make_dialogue({"a", "b"});
    CHECK(dialogue_state_ids(d1) == std::vector<int>{0});
}

TEST_CASE("tokenize and detokenize round-trip for in-vocab text") {
    Dialogue d = make_dialogue({"the quick brown fox , jumped !", "over the lazy dog ."});
    Vocabulary v = build_vocab({d}, 1);
    for (const std::string& text : {std::string("the quick brown fox"), std::string("lazy dog ."),
                                    std::string("fox , over !")}) {
        TokenSeq seq = tokenize_utterance(text, v, 64);
        std::string surface = detokenize(seq.ids, v);
        TokenSeq again = tokenize_utterance(surface, v, 64);
        CHECK(seq.ids == again.ids);
    }
}

TEST_CASE("corpus loading accepts well-formed records") {
    std::string path = temp_file("corpus_ok.jsonl",
        R"({"id":"a","emotion":3,"utterances":[{"text":"hi there","role":"speaker","ei":7},{"text":"hello","role":"listener","ei":33}]})"
        "\n"
        R"({"id":"b","emotion":0,"utterances":[{"text":"one","role":"speaker","ei":0},{"text":"two","role":"listener","ei":1},{"text":"three","role":"speaker","ei":2},{"text":"four","role":"listener","ei":3}]})"
        "\n");
    std::vector<Dialogue> ds = load_corpus(path);
    REQUIRE(ds.size() == 2);
    CHECK(ds[0].id == "a");
    CHECK(ds[0].dialogue_emotion == 3);
    CHECK(ds[0].utterances.size() == 2);
    CHECK(ds[0].utterances[0].role == Role::Speaker);
    CHECK(ds[0].utterances[1].role == Role::Listener);
    CHECK(ds[0].utterances[1].ei_label == 33);
    CHECK(ds[1].utterances.size() == 4);
    CHECK(ds[1].context_size() == 3);
    CHECK(ds[1].response().text == "four");
    std::remove(path.c_str());
}

TEST_CASE("corpus loading failure modes") {
    SUBCASE("missing file") {
        CHECK_THROWS_WITH_AS(load_corpus("/nonexistent/corpus.jsonl"), doctest::Contains("MissingFile"),
                             Error);
    }

    SUBCASE("empty file gives an empty sequence") {
        std::string path = temp_file("corpus_empty.jsonl", "");
        CHECK(load_corpus(path).empty());
        std::remove(path.c_str());
    }

    SUBCASE("ei label at 41 is out of range") {
        std::string path = temp_file("corpus_ei.jsonl",
            R"({"id":"a","emotion":0,"utterances":[{"text":"x","role":"speaker","ei":41},{"text":"y","role":"listener","ei":0}]})");
        CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("LabelOutOfRange"), Error);
        std::remove(path.c_str());
    }

    SUBCASE("emotion label out of range names the line") {
        std::string path = temp_file("corpus_emo.jsonl",
            R"({"id":"a","emotion":32,"utterances":[{"text":"x","role":"speaker","ei":0},{"text":"y","role":"listener","ei":0}]})");
        CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("line 1"), Error);
        std::remove(path.c_str());
    }

    SUBCASE("single utterance is an empty dialogue") {
        std::string path = temp_file("corpus_single.jsonl",
            R"({"id":"a","emotion":0,"utterances":[{"text":"x","role":"speaker","ei":0}]})");
        CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("EmptyDialogue"), Error);
        std::remove(path.c_str());
    }

    SUBCASE("non-alternating roles are rejected") {
        std::string path = temp_file("corpus_roles.jsonl",
            R"({"id":"a","emotion":0,"utterances":[{"text":"x","role":"speaker","ei":0},{"text":"y","role":"speaker","ei":0}]})");
        CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("alternate"), Error);
        std::remove(path.c_str());
    }

    SUBCASE("blank text is rejected") {
        std::string path = temp_file("corpus_blank.jsonl",
            R"({"id":"a","emotion":0,"utterances":[{"text":"  ","role":"speaker","ei":0},{"text":"y","role":"listener","ei":0}]})");
        CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("ParseError"), Error);
        std::remove(path.c_str());
    }

    SUBCASE("malformed json names the line") {
        std::string path = temp_file("corpus_bad.jsonl",
            R"({"id":"a","emotion":0,"utterances":[{"text":"x","role":"speaker","ei":0},{"text":"y","role":"listener","ei":0}]})"
            "\nnot json\n");
        CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("line 2"), Error);
        std::remove(path.c_str());
    }
}

// Randomized records: valid ones load and satisfy the invariants, each
// single-field corruption is rejected.
TEST_CASE("corpus loader enforces the dialogue invariants") {
    Rng rng(404);
    const char* words[] = {"hi", "oh", "wow", "sad", "great", "really", "why", "sure"};

    auto random_valid = [&](int idx) {
        std::string line = R"({"id":"d)" + std::to_string(idx) + R"(","emotion":)" +
                           std::to_string(rng.index(32)) + R"(,"utterances":[)";
        int n = 2 + static_cast<int>(rng.index(4));
        for (int k = 0; k < n; ++k) {
            if (k) line += ",";
            line += R"({"text":")" + std::string(words[rng.index(8)]) + R"(","role":")" +
                    (k % 2 == 0 ? "speaker" : "listener") + R"(","ei":)" + std::to_string(rng.index(41)) +
                    "}";
        }
        return line + "]}";
    };

    std::string good;
    for (int i = 0; i < 30; ++i) good += random_valid(i) + "\n";
    std::string path = temp_file("corpus_prop.jsonl", good);
    std::vector<Dialogue> ds = load_corpus(path);
    CHECK(ds.size() == 30);
    for (const Dialogue& d : ds) {
        CHECK(d.utterances.size() >= 2);
        CHECK(d.dialogue_emotion >= 0);
        CHECK(d.dialogue_emotion < 32);
        for (std::size_t k = 0; k < d.utterances.size(); ++k) {
            CHECK(d.utterances[k].ei_label >= 0);
            CHECK(d.utterances[k].ei_label < 41);
            CHECK(d.utterances[k].role == (k % 2 == 0 ? Role::Speaker : Role::Listener));
        }
    }
    std::remove(path.c_str());

    const char* corruptions[] = {
        R"({"id":"x","emotion":-1,"utterances":[{"text":"a","role":"speaker","ei":0},{"text":"b","role":"listener","ei":0}]})",
        R"({"id":"x","emotion":0,"utterances":[{"text":"a","role":"speaker","ei":-3},{"text":"b","role":"listener","ei":0}]})",
        R"({"id":"x","emotion":0,"utterances":[{"text":"a","role":"narrator","ei":0},{"text":"b","role":"listener","ei":0}]})",
        R"({"id":"x","emotion":0,"utterances":[{"text":"a","role":"listener","ei":0},{"text":"b","role":"speaker","ei":0}]})",
        R"({"id":"x","emotion":0,"utterances":[]})",
        R"({"id":7,"emotion":0,"utterances":[{"text":"a","role":"speaker","ei":0},{"text":"b","role":"listener","ei":0}]})",
        R"({"id":"x","emotion":"angry","utterances":[{"text":"a","role":"speaker","ei":0},{"text":"b","role":"listener","ei":0}]})",
        R"([1,2,3])",
    };
    for (const char* bad : corruptions) {
        std::string p = temp_file("corpus_corrupt.jsonl", std::string(bad) + "\n");
        CHECK_THROWS_AS(load_corpus(p), Error);
        std::remove(p.c_str());
    }
}

TEST_CASE("vocab file round-trips tokens by line") {
    Dialogue d = make_dialogue({"alpha beta gamma", "delta beta"});
    Vocabulary v = build_vocab({d}, 1);
    std::string path = (std::filesystem::temp_directory_path() / "vocab.txt").string();
    save_vocab(path, v);

    Vocabulary loaded = load_vocab(path);
    CHECK(loaded.size() == v.size());
    CHECK(loaded.indexed_tokens() == v.indexed_tokens());
    CHECK(loaded.id("beta") == v.id("beta"));
    CHECK(loaded.frequency(loaded.id("beta")) == 1); // the text file carries no counts

    std::ifstream is(path);
    std::string first;
    std::getline(is, first);
    CHECK(first == v.token(5)); // line number = id - 5
    std::remove(path.c_str());

    CHECK_THROWS_WITH_AS(load_vocab("/nonexistent/vocab.txt"), doctest::Contains("MissingFile"), Error);
}

TEST_CASE("vocabulary constructor rejects malformed input") {
    CHECK_THROWS_WITH_AS(Vocabulary({"a", "a"}, {}), doctest::Contains("duplicate"), Error);
    CHECK_THROWS_AS(Vocabulary({"a"}, {1, 2}), Error);
    CHECK_THROWS_AS(Vocabulary({"a"}, {0}), Error);
    CHECK_THROWS_AS(Vocabulary({""}, {}), Error);
    Vocabulary v;
    CHECK(v.size() == 5);
    CHECK(v.id("anything") == Vocabulary::kUnk);
    CHECK_THROWS_WITH_AS(v.token(99), doctest::Contains("LabelOutOfRange"), Error);
}
