#include "vpnprobe/core/psk.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace vpnprobe {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

std::vector<PskCandidate> parse_psk_candidates(std::string_view text,
                                               std::string_view default_label) {
    std::vector<PskCandidate> out;
    std::unordered_set<std::string> seen;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                                : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        line = trim(line);
        if (line.empty() || line.front() == '#') continue;

        std::string label(default_label);
        std::size_t colon = line.find(':');
        if (colon != std::string_view::npos) {
            label = std::string(trim(line.substr(0, colon)));
            line = trim(line.substr(colon + 1));
            if (line.empty()) continue;
        }
        std::string key(line);
        if (seen.insert(key).second) {
            out.push_back(PskCandidate{std::move(label), std::move(key), true});
        }
    }
    return out;
}

std::vector<PskCandidate> load_psk_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_psk_candidates(buf.str());
}

}  // namespace vpnprobe
