// SPDX-License-Identifier: Apache-2.0
#include "gspoison/run_config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <openssl/evp.h>
#include <toml.hpp>

#include "gspoison/error.hpp"

namespace gspoison {

void RunConfig::validate() const {
    poison.validate();
    if (kde_cutoff < 0.0) throw ContractError("kde.cutoff must be >= 0");
    for (int r : grid_resolution)
        if (r < 1) throw ContractError("kde.resolution entries must be >= 1");
    if (!(sprite_scale > 0.0)) throw ContractError("sprite.scale must be positive");
    if (alpha_threshold < 0 || alpha_threshold > 254) throw ContractError("sprite.alpha_threshold must lie in [0, 254]");
    noise.validate();
    for (int t : checkpoints)
        if (t < 0 || t > noise.total_T) throw ContractError("noise.checkpoints must lie in [0, total_T]");
    for (double c : background)
        if (!(c >= 0.0 && c <= 1.0)) throw ContractError("render.background components must lie in [0, 1]");
    if (threads < 0) throw ContractError("run.threads must be >= 0");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["poison"] = {{"t_min", poison.t_min},
                   {"samples_per_ray", poison.samples_per_ray},
                   {"opacity", poison.poison_opacity},
                   {"pixel_stride", poison.pixel_stride}};
    j["kde"] = {{"bandwidth", poison.bandwidth_h}, {"cutoff", kde_cutoff}, {"resolution", grid_resolution}};
    j["sprite"] = {{"scale", sprite_scale}, {"alpha_threshold", alpha_threshold}};
    j["sprite"]["offset"] = std::isnan(sprite_offset_u) ? nlohmann::json("centered")
                                                         : nlohmann::json::array({sprite_offset_u, sprite_offset_v});
    j["noise"] = {{"sigma0", noise.sigma0},
                  {"total_T", noise.total_T},
                  {"decay", decay_name(noise.decay)},
                  {"checkpoints", checkpoints}};
    j["render"] = {{"background", background}};
    j["run"] = {{"seed", seed}};
    j["success_rule"] = {{"min_illusory_psnr_exclusive", 25.0}, {"max_test_drop", 3.0}};
    return j;
}

namespace {

using Setter = std::function<void(RunConfig&, const toml::node&, const std::string&)>;

double as_double(const toml::node& n, const std::string& key) {
    if (auto v = n.value<double>(); v && (n.is_floating_point() || n.is_integer())) return *v;
    throw FormatError("config key '" + key + "' must be a number");
}

std::int64_t as_int(const toml::node& n, const std::string& key) {
    if (auto v = n.value_exact<std::int64_t>()) return *v;
    throw FormatError("config key '" + key + "' must be an integer");
}

std::vector<double> as_numbers(const toml::node& n, const std::string& key, std::size_t want) {
    const toml::array* arr = n.as_array();
    if (!arr || (want && arr->size() != want))
        throw FormatError("config key '" + key + "' must be an array of " +
                          (want ? std::to_string(want) + " numbers" : std::string("numbers")));
    std::vector<double> out;
    for (const auto& e : *arr) out.push_back(as_double(e, key));
    return out;
}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> s = {
        {"poison",
         {{"t_min", [](RunConfig& c, const toml::node& n, const std::string& k) { c.poison.t_min = as_double(n, k); }},
          {"samples_per_ray",
           [](RunConfig& c, const toml::node& n, const std::string& k) {
               c.poison.samples_per_ray = static_cast<int>(as_int(n, k));
           }},
          {"opacity",
           [](RunConfig& c, const toml::node& n, const std::string& k) { c.poison.poison_opacity = as_double(n, k); }},
          {"pixel_stride", [](RunConfig& c, const toml::node& n, const std::string& k) {
               c.poison.pixel_stride = static_cast<int>(as_int(n, k));
           }}}},
        {"kde",
         {{"bandwidth",
           [](RunConfig& c, const toml::node& n, const std::string& k) { c.poison.bandwidth_h = as_double(n, k); }},
          {"cutoff", [](RunConfig& c, const toml::node& n, const std::string& k) { c.kde_cutoff = as_double(n, k); }},
          {"resolution", [](RunConfig& c, const toml::node& n, const std::string& k) {
               const auto v = as_numbers(n, k, 3);
               for (int a = 0; a < 3; ++a) {
                   if (v[a] != std::floor(v[a])) throw FormatError("config key '" + k + "' must hold integers");
                   c.grid_resolution[a] = static_cast<int>(v[a]);
               }
           }}}},
        {"sprite",
         {{"offset",
           [](RunConfig& c, const toml::node& n, const std::string& k) {
               const auto v = as_numbers(n, k, 2);
               c.sprite_offset_u = v[0];
               c.sprite_offset_v = v[1];
           }},
          {"scale", [](RunConfig& c, const toml::node& n, const std::string& k) { c.sprite_scale = as_double(n, k); }},
          {"alpha_threshold", [](RunConfig& c, const toml::node& n, const std::string& k) {
               c.alpha_threshold = static_cast<int>(as_int(n, k));
           }}}},
        {"noise",
         {{"sigma0", [](RunConfig& c, const toml::node& n, const std::string& k) { c.noise.sigma0 = as_double(n, k); }},
          {"total_T",
           [](RunConfig& c, const toml::node& n, const std::string& k) {
               c.noise.total_T = static_cast<int>(as_int(n, k));
           }},
          {"decay",
           [](RunConfig& c, const toml::node& n, const std::string& k) {
               auto v = n.value<std::string>();
               if (!v) throw FormatError("config key '" + k + "' must be a string");
               c.noise.decay = parse_decay(*v);
           }},
          {"checkpoints", [](RunConfig& c, const toml::node& n, const std::string& k) {
               const toml::array* arr = n.as_array();
               if (!arr) throw FormatError("config key '" + k + "' must be an array of integers");
               c.checkpoints.clear();
               for (const auto& e : *arr) c.checkpoints.push_back(static_cast<int>(as_int(e, k)));
           }}}},
        {"render",
         {{"background",
           [](RunConfig& c, const toml::node& n, const std::string& k) {
               const auto v = as_numbers(n, k, 3);
               for (int a = 0; a < 3; ++a) c.background[a] = v[a];
           }}}},
        {"run",
         {{"seed",
           [](RunConfig& c, const toml::node& n, const std::string& k) {
               const auto v = as_int(n, k);
               if (v < 0) throw FormatError("config key '" + k + "' must be non-negative");
               c.seed = static_cast<std::uint64_t>(v);
           }},
          {"threads", [](RunConfig& c, const toml::node& n, const std::string& k) {
               c.threads = static_cast<int>(as_int(n, k));
           }}}},
    };
    return s;
}

} // namespace

void apply_toml_string(RunConfig& cfg, const std::string& text, const std::string& source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
        throw FormatError(os.str());
    }
    for (auto&& [section_key, section] : root) {
        const std::string sname(section_key.str());
        const auto it = schema().find(sname);
        if (it == schema().end()) throw FormatError(source + ": unknown config section '" + sname + "'");
        const toml::table* tbl = section.as_table();
        if (!tbl) throw FormatError(source + ": '" + sname + "' must be a table");
        for (auto&& [key, value] : *tbl) {
            const std::string kname(key.str());
            const auto setter = it->second.find(kname);
            if (setter == it->second.end())
                throw FormatError(source + ": unknown config key '" + sname + "." + kname + "'");
            try {
                setter->second(cfg, value, sname + "." + kname);
            } catch (const ContractError& e) {
                throw FormatError(source + ": " + e.what());
            }
        }
    }
}

void apply_toml(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_toml_string(cfg, ss.str(), path.string());
}

std::string file_sha256(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("sha256 unavailable");
    }
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

} // namespace gspoison
