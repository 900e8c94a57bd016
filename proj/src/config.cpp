#include "smtl/config.hpp"

#include "smtl/util.hpp"

namespace smtl {

std::string RunProfile::option(const std::string& key, const std::string& fallback) const {
    auto it = options.find(key);
    return it == options.end() ? fallback : it->second;
}

RunProfile builtin_profile(const std::string& name) {
    RunProfile profile;
    profile.name = name;
    if (name == "mock") {
        profile.options["model.backend"] = "scripted";
        profile.options["tools.backend"] = "mock";
        profile.options["judge.mode"] = "exact";
        return profile;
    }
    if (name == "smtl-100" || name == "smtl-300") {
        profile.engine.max_steps = name == "smtl-100" ? 100 : 300;
        profile.options["model.backend"] = "live";
        profile.options["tools.backend"] = "live";
        profile.options["judge.mode"] = "live";
        profile.options["tools.search_base_url"] = "https://google.serper.dev";
        profile.options["tools.search_path"] = "/search";
        profile.options["tools.reader_base_url"] = "https://r.jina.ai";
        profile.options["tools.reader_path"] = "/";
        profile.options["tools.summarizer"] = "model";
        return profile;
    }
    throw std::invalid_argument("unknown profile \"" + name +
                                "\" (built-ins: mock, smtl-100, smtl-300)");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> entries;
    std::vector<std::string> lines = split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(i + 1) +
                                        ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument("config line " + std::to_string(i + 1) + ": empty key");
        }
        entries[key] = value;
    }
    return entries;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    return parse_config_text(read_file(path));
}

namespace {

long parse_long(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": \"" + value + "\" is not an integer");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    std::string v = to_lower(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config key " + key + ": \"" + value + "\" is not a boolean");
}

}  // namespace

void apply_config(RunProfile& profile, const std::map<std::string, std::string>& entries) {
    for (const auto& [key, value] : entries) {
        if (key.rfind("engine.", 0) != 0) {
            profile.options[key] = value;
            continue;
        }
        std::string field = key.substr(7);
        EngineConfig& e = profile.engine;
        if (field == "max_steps") e.max_steps = static_cast<int>(parse_long(key, value));
        else if (field == "refine_interval") e.refine_interval = static_cast<int>(parse_long(key, value));
        else if (field == "context_budget") e.context_budget = parse_long(key, value);
        else if (field == "tokenizer_id") e.tokenizer_id = value;
        else if (field == "per_step_call_max") e.per_step_call_max = static_cast<int>(parse_long(key, value));
        else if (field == "dispatch_width") e.dispatch_width = static_cast<int>(parse_long(key, value));
        else if (field == "strict_format") e.strict_format = parse_bool(key, value);
        else if (field == "top_k") e.top_k = static_cast<int>(parse_long(key, value));
        else if (field == "model_id") e.model_id = value;
        else if (field == "temperature") e.temperature = std::stod(value);
        else if (field == "max_output_tokens") e.max_output_tokens = static_cast<int>(parse_long(key, value));
        else throw std::invalid_argument("unknown engine config key: " + key);
    }
}

}  // namespace smtl
