#ifndef BBLM_TEXT_HPP
#define BBLM_TEXT_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bblm/errors.hpp"

namespace bblm {

using TokenId = std::int32_t;

inline const std::string kEosToken = "<eos>";
inline const std::string kUnkToken = "<unk>";
// A line consisting of exactly this marker separates documents in a corpus
// file. Sliding windows never cross it.
inline const std::string kDocMarker = "<doc>";

// Whitespace tokenization, case preserved. Every line that carries at least
// one token is closed with an <eos> marker, including the last line of input
// whether or not it ends in a newline.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::size_t end = (nl == std::string::npos) ? text.size() : nl;
        bool any = false;
        std::size_t i = pos;
        while (i < end) {
            while (i < end && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            std::size_t start = i;
            while (i < end && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            if (i > start) {
                tokens.emplace_back(text.substr(start, i - start));
                any = true;
            }
        }
        if (any) tokens.push_back(kEosToken);
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return tokens;
}

// Token<->id map over the max_size-1 most frequent tokens plus <unk>.
// Frequency ties break by first occurrence in the stream. Ids are assigned
// in rank order; <unk> takes the last id and absorbs everything dropped.
class Vocabulary {
public:
    Vocabulary() = default;

    static Vocabulary build(const std::vector<std::string>& tokens,
                            std::size_t max_size) {
        if (max_size < 2) throw ConfigError("vocabulary max_size must be >= 2");
        if (tokens.empty()) throw DataError("cannot build vocabulary from an empty token stream");

        std::unordered_map<std::string, std::size_t> count;
        std::unordered_map<std::string, std::size_t> first_seen;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            auto [it, inserted] = count.try_emplace(tokens[i], 0);
            it->second++;
            if (inserted) first_seen[tokens[i]] = i;
        }

        std::vector<std::string> types;
        types.reserve(count.size());
        for (const auto& [tok, _] : count) types.push_back(tok);
        std::sort(types.begin(), types.end(),
                  [&](const std::string& a, const std::string& b) {
                      if (count[a] != count[b]) return count[a] > count[b];
                      return first_seen[a] < first_seen[b];
                  });
        if (types.size() > max_size - 1) types.resize(max_size - 1);

        Vocabulary v;
        std::size_t kept_total = 0;
        for (const auto& tok : types) {
            TokenId id = static_cast<TokenId>(v.id_to_token_.size());
            v.token_to_id_[tok] = id;
            v.id_to_token_.push_back(tok);
            v.counts_.push_back(static_cast<std::int64_t>(count[tok]));
            kept_total += count[tok];
        }
        std::size_t dropped = tokens.size() - kept_total;
        if (auto it = v.token_to_id_.find(kUnkToken); it != v.token_to_id_.end()) {
            // <unk> occurred literally in the stream; reuse its slot.
            v.unk_id_ = it->second;
            v.counts_[v.unk_id_] += static_cast<std::int64_t>(dropped);
        } else {
            v.unk_id_ = static_cast<TokenId>(v.id_to_token_.size());
            v.token_to_id_[kUnkToken] = v.unk_id_;
            v.id_to_token_.push_back(kUnkToken);
            v.counts_.push_back(static_cast<std::int64_t>(dropped));
        }
        return v;
    }

    std::size_t size() const { return id_to_token_.size(); }
    TokenId unk_id() const { return unk_id_; }

    TokenId id(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? unk_id_ : it->second;
    }

    bool contains(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it != token_to_id_.end() && it->second != unk_id_;
    }

    const std::string& token(TokenId id) const { return id_to_token_.at(id); }
    std::int64_t count(TokenId id) const { return counts_.at(id); }

    std::vector<TokenId> encode(const std::vector<std::string>& tokens) const {
        std::vector<TokenId> ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens) ids.push_back(id(t));
        return ids;
    }

    std::vector<std::string> decode(const std::vector<TokenId>& ids) const {
        std::vector<std::string> tokens;
        tokens.reserve(ids.size());
        for (TokenId i : ids) tokens.push_back(token(i));
        return tokens;
    }

    // Serialized as one token per line in id order; counts tab-separated.
    void save(std::ostream& os) const {
        for (std::size_t i = 0; i < id_to_token_.size(); ++i)
            os << id_to_token_[i] << '\t' << counts_[i] << '\n';
    }

    static Vocabulary load(std::istream& is) {
        Vocabulary v;
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) throw DataError("malformed vocabulary line: " + line);
            std::string tok = line.substr(0, tab);
            std::int64_t c = std::stoll(line.substr(tab + 1));
            TokenId id = static_cast<TokenId>(v.id_to_token_.size());
            v.token_to_id_[tok] = id;
            v.id_to_token_.push_back(tok);
            v.counts_.push_back(c);
            if (tok == kUnkToken) v.unk_id_ = id;
        }
        if (v.id_to_token_.empty()) throw DataError("empty vocabulary file");
        return v;
    }

private:
    std::unordered_map<std::string, TokenId> token_to_id_;
    std::vector<std::string> id_to_token_;
    std::vector<std::int64_t> counts_;
    TokenId unk_id_ = 0;
};

// A corpus file split at <doc> marker lines. Most files are one document.
inline std::vector<std::vector<std::string>> split_documents(const std::string& text) {
    std::vector<std::vector<std::string>> docs;
    std::string current;
    std::size_t pos = 0;
    auto flush = [&]() {
        auto toks = tokenize(current);
        if (!toks.empty()) docs.push_back(std::move(toks));
        current.clear();
    };
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, (nl == std::string::npos ? text.size() : nl) - pos);
        if (line == kDocMarker) {
            flush();
        } else {
            current += line;
            current += '\n';
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    flush();
    return docs;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open corpus file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace bblm

#endif
