#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace covweave {

/// Pluggable token counter. The default estimator is ceil(bytes / 4), which
/// tracks the cl100k average for English prose and keeps the pipeline fully
/// offline; the active tokenizer name is recorded in run metadata so scores
/// are interpretable.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::string name() const = 0;
    virtual std::size_t count(std::string_view text) const = 0;
};

class CharEstimatorTokenizer final : public Tokenizer {
public:
    std::string name() const override { return "char-estimator(ceil(chars/4))"; }
    std::size_t count(std::string_view text) const override {
        return (text.size() + 3) / 4;
    }
};

/// Tokenizer backed by an arbitrary counting function (external tokenizers
/// plug in here).
class CallbackTokenizer final : public Tokenizer {
public:
    CallbackTokenizer(std::string name, std::function<std::size_t(std::string_view)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}
    std::string name() const override { return name_; }
    std::size_t count(std::string_view text) const override { return fn_(text); }

private:
    std::string name_;
    std::function<std::size_t(std::string_view)> fn_;
};

inline const Tokenizer& default_tokenizer() {
    static const CharEstimatorTokenizer tok;
    return tok;
}

inline std::size_t count_tokens(std::string_view text, const Tokenizer& tok = default_tokenizer()) {
    return tok.count(text);
}

}  // namespace covweave
