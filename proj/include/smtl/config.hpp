#pragma once

#include <map>
#include <string>

#include "smtl/engine.hpp"

namespace smtl {

/// A named preset bundling the engine configuration with backend selection
/// and output options. Backend options are an open key/value set:
///   model.backend = scripted | live      tools.backend = mock | live
///   model.script = <path>                tools.corpus = <path>
///   model.base_url, model.path           tools.search_base_url, tools.search_path
///   judge.mode = exact | scripted | live tools.reader_base_url, tools.reader_path
///   judge.script, judge.model_id         tools.summarizer = template | model
///   out.dir                              tools.timeout_seconds
/// Secrets never appear here; they come from SEARCH_API_KEY, MODEL_API_KEY
/// and MODEL_BASE_URL in the environment.
struct RunProfile {
    std::string name;
    EngineConfig engine;
    std::map<std::string, std::string> options;

    std::string option(const std::string& key, const std::string& fallback = "") const;
};

/// Built-in presets: "mock" (scripted model + mock tools, offline),
/// "smtl-100" and "smtl-300" (live backends, step budgets 100 and 300).
RunProfile builtin_profile(const std::string& name);

/// Plain-text config: "section.key = value" lines, '#' comments, blank lines
/// ignored. Keys nest by dots.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Overlays file/flag entries onto a profile: engine.* keys map onto the
/// typed engine config, everything else lands in options. Unknown engine
/// keys or unparsable values throw std::invalid_argument.
void apply_config(RunProfile& profile, const std::map<std::string, std::string>& entries);

}  // namespace smtl
