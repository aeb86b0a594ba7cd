#include "bandgate/selection.hpp"

#include <algorithm>

#include "bandgate/error.hpp"

namespace bandgate {

BandSelection::BandSelection(std::vector<std::size_t> bands) : bands_(std::move(bands))
{
    for (std::size_t i = 1; i < bands_.size(); ++i) {
        if (bands_[i] <= bands_[i - 1]) {
            throw ValidationError("band selection must be strictly increasing and distinct");
        }
    }
}

BandSelection BandSelection::from_unordered(std::vector<std::size_t> bands)
{
    std::sort(bands.begin(), bands.end());
    return BandSelection(std::move(bands));
}

bool BandSelection::contains(std::size_t band) const noexcept
{
    return std::binary_search(bands_.begin(), bands_.end(), band);
}

std::string BandSelection::joined(char separator) const
{
    std::string out;
    for (std::size_t i = 0; i < bands_.size(); ++i) {
        if (i > 0) {
            out.push_back(separator);
        }
        out += std::to_string(bands_[i]);
    }
    return out;
}

} // namespace bandgate
