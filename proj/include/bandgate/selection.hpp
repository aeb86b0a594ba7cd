#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace bandgate {

/// k distinct band indices, strictly increasing.
class BandSelection {
public:
    BandSelection() = default;

    /// Throws ValidationError unless indices are strictly increasing.
    explicit BandSelection(std::vector<std::size_t> bands);

    /// Sorts and checks distinctness.
    static BandSelection from_unordered(std::vector<std::size_t> bands);

    const std::vector<std::size_t>& bands() const noexcept { return bands_; }
    std::size_t size() const noexcept { return bands_.size(); }
    bool empty() const noexcept { return bands_.empty(); }
    std::size_t operator[](std::size_t i) const { return bands_[i]; }

    bool contains(std::size_t band) const noexcept;

    /// "3;11;19"
    std::string joined(char separator = ';') const;

    friend bool operator==(const BandSelection&, const BandSelection&) = default;

private:
    std::vector<std::size_t> bands_;
};

} // namespace bandgate
