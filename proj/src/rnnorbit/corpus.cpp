#include "rnnorbit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace rnnorbit {

namespace {

// Validates UTF-8 and returns the byte length of the sequence starting
// at `i`, or 0 if malformed.
std::size_t utf8_seq_len(std::string_view s, std::size_t i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    if (c < 0x80) len = 1;
    else if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    else return 0;
    if (i + len > s.size()) return 0;
    for (std::size_t k = 1; k < len; ++k)
        if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 0;
    return len;
}

bool is_split_punct(char c) {
    switch (c) {
        case '.': case ',': case '!': case '?':
        case ';': case ':': case '"': case '\'':
            return true;
        default:
            return false;
    }
}

constexpr std::string_view kEmDash = "\xe2\x80\x94";  // U+2014

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            tokens.push_back(word);
            word.clear();
        }
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t len = utf8_seq_len(text, i);
        if (len == 0) throw IngestError("tokenize: invalid UTF-8 at byte " + std::to_string(i));
        if (len == 1) {
            const char c = text[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                flush();
            } else if (is_split_punct(c)) {
                flush();
                tokens.emplace_back(1, c);
            } else {
                word.push_back(static_cast<char>(
                    std::tolower(static_cast<unsigned char>(c))));
            }
            ++i;
        } else {
            const std::string_view seq = text.substr(i, len);
            if (seq == kEmDash) {
                flush();
                tokens.emplace_back(seq);
            } else {
                word.append(seq);
            }
            i += len;
        }
    }
    flush();
    return tokens;
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? unk_id : it->second;
}

Vocabulary build_vocab(const std::vector<std::string>& tokens, std::size_t min_count) {
    if (tokens.empty()) throw IngestError("build_vocab: empty token list");
    std::unordered_map<std::string, std::size_t> freq;
    for (const std::string& t : tokens) ++freq[t];

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [tok, n] : freq)
        if (n >= min_count) kept.emplace_back(tok, n);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    for (auto& [tok, n] : kept) {
        v.token_to_id.emplace(tok, static_cast<int>(v.id_to_token.size()));
        v.id_to_token.push_back(tok);
    }
    v.unk_id = static_cast<int>(v.id_to_token.size());
    v.id_to_token.push_back(kUnkToken);
    return v;
}

std::vector<int> encode(const Vocabulary& v, const std::vector<std::string>& tokens) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) ids.push_back(v.lookup(t));
    return ids;
}

TokenStream split(std::vector<int> ids) {
    if (ids.size() < 5) throw IngestError("split: need at least 5 tokens");
    TokenStream s;
    s.train_end = ids.size() * 4 / 5;
    s.ids = std::move(ids);
    return s;
}

void save_vocab(const std::string& path, const Vocabulary& v) {
    std::ostringstream out;
    out << "# rnnorbit vocab v1\n";
    for (const std::string& tok : v.id_to_token) out << tok << "\n";
    write_file(path, out.str());
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# rnnorbit vocab", 0) != 0)
        throw IngestError("not a vocabulary file: " + path);
    Vocabulary v;
    while (std::getline(in, line)) {
        if (line == kUnkToken) v.unk_id = static_cast<int>(v.id_to_token.size());
        else v.token_to_id.emplace(line, static_cast<int>(v.id_to_token.size()));
        v.id_to_token.push_back(line);
    }
    if (v.unk_id < 0) throw IngestError("vocabulary file has no unk entry: " + path);
    return v;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_file(const std::string& path) { return fnv1a(read_file(path)); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace rnnorbit
