#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rnnorbit/errors.hpp"

namespace rnnorbit {

inline constexpr const char* kUnkToken = "<unk>";

// Lowercased word tokens; the punctuation marks . , ! ? ; : " ' and the
// em-dash are split off as standalone tokens. Throws IngestError on
// invalid UTF-8.
std::vector<std::string> tokenize(std::string_view text);

struct Vocabulary {
    std::vector<std::string> id_to_token;
    std::unordered_map<std::string, int> token_to_id;
    int unk_id = -1;

    std::size_t size() const { return id_to_token.size(); }
    int lookup(const std::string& token) const;
    const std::string& token(int id) const { return id_to_token.at(static_cast<std::size_t>(id)); }
};

// Tokens with frequency >= min_count get ids ordered by (frequency desc,
// token asc); everything rarer maps to the trailing unk id.
Vocabulary build_vocab(const std::vector<std::string>& tokens, std::size_t min_count);

std::vector<int> encode(const Vocabulary& v, const std::vector<std::string>& tokens);

struct TokenStream {
    std::vector<int> ids;
    std::size_t train_end = 0;  // ids[0, train_end) train, rest validation

    std::size_t train_size() const { return train_end; }
    std::size_t valid_size() const { return ids.size() - train_end; }
};

// Contiguous 4:1 split, no shuffling. Throws IngestError for < 5 tokens.
TokenStream split(std::vector<int> ids);

// Vocabulary file: header comment line, then one token per line with
// line order = id (unk appears at its own id, the last line).
void save_vocab(const std::string& path, const Vocabulary& v);
Vocabulary load_vocab(const std::string& path);

// FNV-1a 64-bit, used to bind checkpoints to the vocabulary they were
// trained against.
std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t hash_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace rnnorbit
