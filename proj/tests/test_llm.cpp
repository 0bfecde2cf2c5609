#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "toolplan/llm.hpp"

using namespace toolplan;
using namespace toolplan::llm;

namespace {

CompletionRequest request_for(const std::string& text) {
    CompletionRequest r;
    r.model_id = "test-model";
    r.messages = {{Role::user, text}};
    return r;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("replay backend returns fixture entries by stage and ordinal") {
    ReplayBackend backend(std::vector<ReplayBackend::Entry>{
        {"analyzer", "first analyzer reply", {}},
        {"planner", "planner reply", {}},
        {"analyzer", "second analyzer reply", {}}});
    CHECK(backend.complete(request_for("a"), "analyzer") == "first analyzer reply");
    CHECK(backend.complete(request_for("b"), "analyzer") == "second analyzer reply");
    CHECK(backend.complete(request_for("c"), "planner") == "planner reply");
    CHECK(backend.transcript().call_count() == 3);
    CHECK(backend.transcript().call_count("analyzer") == 2);
}

TEST_CASE("replay miss when more calls arrive than fixture entries") {
    ReplayBackend backend(std::vector<ReplayBackend::Entry>{{"analyzer", "only one", {}}});
    CHECK(backend.complete(request_for("a"), "analyzer") == "only one");
    try {
        backend.complete(request_for("b"), "analyzer");
        FAIL("expected replay miss");
    } catch (const BackendError& e) {
        CHECK(e.kind == BackendError::Kind::replay_miss);
    }
}

TEST_CASE("replay is bit-deterministic across identical call sequences") {
    static std::string first;
    for (int round = 0; round < 2; ++round) {
        ReplayBackend backend(
            std::vector<ReplayBackend::Entry>{{"coder", "walk_to_position([0.1, 0.2, 0.3])\n", {}}});
        std::string got = backend.complete(request_for("x"), "coder");
        if (round == 0) {
            first = got;
        } else {
            CHECK(got == first);
        }
    }
}

TEST_CASE("strict replay pins the prompt hash") {
    CompletionRequest pinned = request_for("the exact prompt");
    std::string hash = ReplayBackend::prompt_hash(pinned);
    ReplayBackend strict(std::vector<ReplayBackend::Entry>{{"coder", "reply", hash}}, /*strict=*/true);
    CHECK(strict.complete(pinned, "coder") == "reply");

    ReplayBackend strict2(std::vector<ReplayBackend::Entry>{{"coder", "reply", hash}}, /*strict=*/true);
    try {
        strict2.complete(request_for("an edited prompt"), "coder");
        FAIL("expected replay miss");
    } catch (const BackendError& e) {
        CHECK(e.kind == BackendError::Kind::replay_miss);
    }

    // non-strict mode survives prompt edits
    ReplayBackend relaxed(std::vector<ReplayBackend::Entry>{{"coder", "reply", hash}}, /*strict=*/false);
    CHECK(relaxed.complete(request_for("an edited prompt"), "coder") == "reply");
}

TEST_CASE("stub backend echoes canned responses in order") {
    StubBackend stub;
    stub.push_response("planner", "a canned plan");
    stub.push_response("coder", "a canned script");
    CHECK(stub.complete(request_for("q"), "planner") == "a canned plan");
    CHECK(stub.complete(request_for("q"), "coder") == "a canned script");
    CHECK_THROWS_AS(stub.complete(request_for("q"), "coder"), BackendError);
}

TEST_CASE("transcript round-trips through JSON files") {
    StubBackend stub;
    stub.push_response("analyzer", "reply one");
    stub.push_response("planner", "reply two");
    stub.complete(request_for("first prompt"), "analyzer");
    stub.complete(request_for("second prompt"), "planner");

    std::string path = temp_path("toolplan_transcript_test.json");
    save_transcript(stub.transcript(), path);
    Transcript loaded = load_transcript(path);
    REQUIRE(loaded.entries.size() == 2);
    CHECK(loaded.entries[0].stage == "analyzer");
    CHECK(loaded.entries[0].response == "reply one");
    CHECK(loaded.entries[0].request.messages[0].content == "first prompt");
    CHECK(loaded.entries[1].timestamp_ms == stub.transcript().entries[1].timestamp_ms);

    SUBCASE("empty transcript round-trips empty") {
        Transcript empty;
        save_transcript(empty, path);
        CHECK(load_transcript(path).entries.empty());
    }

    SUBCASE("truncated file is a malformed-file error") {
        std::ofstream out(path);
        out << R"({"schema_version": 1, "entries": [{"stage": "analyzer")";
        out.close();
        try {
            load_transcript(path);
            FAIL("expected malformed error");
        } catch (const BackendError& e) {
            CHECK(e.kind == BackendError::Kind::malformed);
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("fixture files round-trip and missing files replay-miss on first call") {
    std::string path = temp_path("toolplan_fixture_test.json");
    ReplayBackend::save_fixture({{"analyzer", "text", {}}}, path);
    ReplayBackend loaded = ReplayBackend::from_file(path);
    CHECK(loaded.complete(request_for("q"), "analyzer") == "text");
    std::remove(path.c_str());

    ReplayBackend missing = ReplayBackend::from_file(temp_path("does_not_exist.json"));
    CHECK_THROWS_AS(missing.complete(request_for("q"), "analyzer"), BackendError);
}

TEST_CASE("live backend talks chat completions over HTTP and records verbatim") {
    httplib::Server server;
    std::string seen_body;
    std::string seen_auth;
    int calls = 0;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        seen_body = req.body;
        seen_auth = req.get_header_value("Authorization");
        if (calls == 1) {
            res.status = 500;  // transient, must be retried
            res.set_content("overloaded", "text/plain");
            return;
        }
        res.set_content(R"({"choices": [{"message": {"content": "assistant says hi"}}]})",
                        "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("TOOLPLAN_TEST_KEY", "sk-test-credential", 1);
    LiveConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    config.model = "test-model";
    config.credential_env = "TOOLPLAN_TEST_KEY";
    config.backoff_ms = 1;
    LiveBackend backend(config);

    CompletionRequest req = request_for("hello");
    req.model_id = "test-model";
    std::string reply = backend.complete(req, "analyzer");
    CHECK(reply == "assistant says hi");
    CHECK(calls == 2);  // one retry after the 500
    CHECK(seen_auth == "Bearer sk-test-credential");
    nlohmann::json body = nlohmann::json::parse(seen_body);
    CHECK(body["model"] == "test-model");
    CHECK(body["temperature"] == 0.0);
    CHECK(body["messages"][0]["content"] == "hello");
    REQUIRE(backend.transcript().entries.size() == 1);
    CHECK(backend.transcript().entries[0].response == "assistant says hi");

    server.stop();
    server_thread.join();
}

TEST_CASE("live backend requires the credential environment variable") {
    unsetenv("TOOLPLAN_MISSING_KEY");
    LiveConfig config;
    config.credential_env = "TOOLPLAN_MISSING_KEY";
    try {
        LiveBackend backend(config);
        FAIL("expected credential_missing");
    } catch (const BackendError& e) {
        CHECK(e.kind == BackendError::Kind::credential_missing);
    }
}
