#include "toolplan/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "json_util.hpp"

namespace toolplan::llm {

using nlohmann::json;
using jsonutil::expect_fields;

std::string to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "assistant") return Role::assistant;
    if (s == "user") return Role::user;
    throw BackendError(BackendError::Kind::malformed, "unknown role '" + s + "'");
}

int Transcript::call_count(const std::string& stage) const {
    int n = 0;
    for (const auto& e : entries) {
        if (e.stage == stage) ++n;
    }
    return n;
}

json request_to_json(const CompletionRequest& r) {
    json msgs = json::array();
    for (const auto& m : r.messages) {
        msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    return {{"model", r.model_id},
            {"temperature", r.temperature},
            {"max_tokens", r.max_tokens},
            {"messages", msgs}};
}

static CompletionRequest request_from_json(const json& j) {
    expect_fields(j, "request", {"model", "temperature", "max_tokens", "messages"});
    CompletionRequest r;
    r.model_id = j.at("model").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.max_tokens = j.at("max_tokens").get<int>();
    for (const auto& m : j.at("messages")) {
        r.messages.push_back({role_from_string(m.at("role").get<std::string>()),
                              m.at("content").get<std::string>()});
    }
    return r;
}

json transcript_to_json(const Transcript& t) {
    json entries = json::array();
    for (const auto& e : t.entries) {
        entries.push_back({{"stage", e.stage},
                           {"request", request_to_json(e.request)},
                           {"response", e.response},
                           {"timestamp_ms", e.timestamp_ms}});
    }
    return {{"schema_version", 1}, {"entries", entries}};
}

Transcript transcript_from_json(const json& j) {
    expect_fields(j, "transcript", {"schema_version", "entries"});
    if (j.at("schema_version").get<int>() != 1) {
        throw BackendError(BackendError::Kind::malformed, "unsupported transcript schema_version");
    }
    Transcript t;
    for (const auto& ej : j.at("entries")) {
        expect_fields(ej, "transcript entry", {"stage", "request", "response", "timestamp_ms"});
        TranscriptEntry e;
        e.stage = ej.at("stage").get<std::string>();
        e.request = request_from_json(ej.at("request"));
        e.response = ej.at("response").get<std::string>();
        e.timestamp_ms = ej.at("timestamp_ms").get<std::int64_t>();
        t.entries.push_back(std::move(e));
    }
    return t;
}

void save_transcript(const Transcript& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw BackendError(BackendError::Kind::malformed, "cannot write '" + path + "'");
    out << transcript_to_json(t).dump(2) << "\n";
}

Transcript load_transcript(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BackendError(BackendError::Kind::malformed, "cannot open '" + path + "'");
    json j;
    try {
        in >> j;
        return transcript_from_json(j);
    } catch (const json::exception& e) {
        throw BackendError(BackendError::Kind::malformed,
                           "malformed transcript '" + path + "': " + e.what());
    } catch (const std::runtime_error& e) {
        throw BackendError(BackendError::Kind::malformed, e.what());
    }
}

std::string Backend::complete(const CompletionRequest& request, const std::string& stage) {
    std::string response = do_complete(request, stage);
    auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count();
    transcript_.entries.push_back({stage, request, response, now});
    return response;
}

std::string StubBackend::do_complete(const CompletionRequest&, const std::string& stage) {
    if (next_ >= responses_.size()) {
        throw BackendError(BackendError::Kind::replay_miss,
                           "stub exhausted after " + std::to_string(responses_.size()) +
                               " responses (stage '" + stage + "')");
    }
    const auto& [expected_stage, text] = responses_[next_];
    if (expected_stage && *expected_stage != stage) {
        throw BackendError(BackendError::Kind::replay_miss,
                           "stub expected stage '" + *expected_stage + "', got '" + stage + "'");
    }
    ++next_;
    return text;
}

std::string ReplayBackend::prompt_hash(const CompletionRequest& request) {
    std::string blob;
    for (const auto& m : request.messages) {
        blob += to_string(m.role);
        blob += '\x1f';
        blob += m.content;
        blob += '\x1e';
    }
    return fnv1a64_hex(blob);
}

ReplayBackend ReplayBackend::from_file(const std::string& path, bool strict) {
    std::ifstream in(path);
    if (!in) return ReplayBackend({}, strict);
    json j;
    try {
        in >> j;
        expect_fields(j, "replay fixture", {"schema_version", "entries"});
        if (j.at("schema_version").get<int>() != 1) {
            throw BackendError(BackendError::Kind::malformed,
                               "unsupported fixture schema_version in '" + path + "'");
        }
        std::vector<Entry> entries;
        for (const auto& ej : j.at("entries")) {
            expect_fields(ej, "fixture entry", {"stage", "response"}, {"prompt_hash"});
            Entry e;
            e.stage = ej.at("stage").get<std::string>();
            e.response = ej.at("response").get<std::string>();
            if (ej.contains("prompt_hash")) e.prompt_hash = ej.at("prompt_hash").get<std::string>();
            entries.push_back(std::move(e));
        }
        return ReplayBackend(std::move(entries), strict);
    } catch (const json::exception& e) {
        throw BackendError(BackendError::Kind::malformed,
                           "malformed fixture '" + path + "': " + e.what());
    }
}

void ReplayBackend::save_fixture(const std::vector<Entry>& entries, const std::string& path) {
    json ej = json::array();
    for (const auto& e : entries) {
        json item = {{"stage", e.stage}, {"response", e.response}};
        if (e.prompt_hash) item["prompt_hash"] = *e.prompt_hash;
        ej.push_back(std::move(item));
    }
    std::ofstream out(path);
    if (!out) throw BackendError(BackendError::Kind::malformed, "cannot write '" + path + "'");
    out << json{{"schema_version", 1}, {"entries", ej}}.dump(2) << "\n";
}

std::string ReplayBackend::do_complete(const CompletionRequest& request, const std::string& stage) {
    if (used_.size() != entries_.size()) used_.assign(entries_.size(), false);
    for (size_t i = 0; i < entries_.size(); ++i) {
        if (used_[i] || entries_[i].stage != stage) continue;
        if (strict_ && entries_[i].prompt_hash && *entries_[i].prompt_hash != prompt_hash(request)) {
            throw BackendError(BackendError::Kind::replay_miss,
                               "replay miss: prompt hash mismatch at stage '" + stage + "'");
        }
        used_[i] = true;
        return entries_[i].response;
    }
    throw BackendError(BackendError::Kind::replay_miss,
                       "replay miss: no fixture entry left for stage '" + stage + "'");
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
    const char* cred = std::getenv(config_.credential_env.c_str());
    if (!cred || !*cred) {
        throw BackendError(BackendError::Kind::credential_missing,
                           "credential environment variable " + config_.credential_env +
                               " is not set");
    }
    credential_ = cred;

    // Split endpoint into scheme://host[:port] and a path prefix.
    std::string url = config_.endpoint;
    size_t scheme = url.find("://");
    size_t path_start = scheme == std::string::npos ? url.find('/') : url.find('/', scheme + 3);
    if (path_start == std::string::npos) {
        host_ = url;
        base_path_ = "";
    } else {
        host_ = url.substr(0, path_start);
        base_path_ = url.substr(path_start);
        while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
    }
}

std::string LiveBackend::do_complete(const CompletionRequest& request, const std::string& stage) {
    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    httplib::Headers headers = {{"Authorization", "Bearer " + credential_}};
    const std::string body = request_to_json(request).dump();
    const std::string path = base_path_ + "/chat/completions";

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config_.backoff_ms * (1 << (attempt - 1))));
        }
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "transient HTTP status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError(BackendError::Kind::transport,
                               "HTTP status " + std::to_string(res->status) + " at stage '" +
                                   stage + "': " + res->body);
        }
        try {
            json j = json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw BackendError(BackendError::Kind::malformed,
                               std::string("malformed completion response: ") + e.what());
        }
    }
    throw BackendError(BackendError::Kind::transport,
                       "gave up after " + std::to_string(config_.max_retries + 1) +
                           " attempts (stage '" + stage + "'): " + last_error);
}

}  // namespace toolplan::llm
