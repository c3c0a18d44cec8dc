#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/local_server.hpp"

using namespace txpoc;
using namespace txpoc::testkit;

namespace {

CompletionRequest request(const std::string& purpose, const std::string& user) {
  return {purpose, {{"system", "You write Foundry tests."}, {"user", user}}};
}

std::string error_of(CompletionProvider& p, const CompletionRequest& r) {
  try {
    p.complete(r);
  } catch (const Error& e) {
    return std::string(error_code_name(e.code()));
  }
  return "none";
}

}  // namespace

TEST(Mock, DigestIsStable) {
  auto a = request("syntax", "fix this");
  auto b = request("syntax", "fix this");
  auto c = request("semantic", "fix this");
  EXPECT_EQ(a.digest(), b.digest());
  EXPECT_NE(a.digest(), c.digest());
  EXPECT_EQ(a.digest().size(), 16u);
}

TEST(Mock, DirectoryLookupOrder) {
  TempDir d;
  auto exact = request("syntax", "prompt one");
  d.put(exact.digest() + ".txt", "by digest");
  d.put("syntax.txt", "by purpose");
  d.put("answer.txt", "from file");
  d.put("rules.json", R"([
    {"purpose": "syntax", "contains": "prompt two", "absent": "skip", "response": "by rule"},
    {"purpose": "syntax", "contains": ["prompt", "three"], "response_file": "answer.txt"}
  ])");
  MockProvider p(d.path());
  EXPECT_EQ(p.complete(exact).text, "by digest");
  EXPECT_EQ(p.complete(request("syntax", "prompt two")).text, "by rule");
  EXPECT_EQ(p.complete(request("syntax", "prompt two skip")).text, "by purpose");
  EXPECT_EQ(p.complete(request("syntax", "prompt three")).text, "from file");
  EXPECT_EQ(p.complete(request("syntax", "anything")).text, "by purpose");
  EXPECT_EQ(error_of(p, request("semantic", "anything")), "ProviderRefusal");
  EXPECT_EQ(p.calls(), 5u);
}

TEST(Mock, EditRuleRewritesSource) {
  TempDir d;
  d.put("rules.json", R"([{"purpose": "syntax", "edit": [{"from": "uint x", "to": "uint256 x"}]}])");
  MockProvider p(d.path());
  auto r = p.complete(request("syntax", "Errors:\n...\n```solidity\nuint x = 1;\nuint x2;\n```\n"));
  EXPECT_EQ(r.text, "```solidity\nuint256 x = 1;\nuint256 x2;\n```\n");
}

TEST(Mock, ScriptedErrors) {
  MockProvider refuse([](const CompletionRequest&) { return std::string(kMockRefuse); });
  MockProvider slow([](const CompletionRequest&) { return std::string(kMockTimeout) + " later"; });
  EXPECT_EQ(error_of(refuse, request("complete", "x")), "ProviderRefusal");
  EXPECT_EQ(error_of(slow, request("complete", "x")), "ProviderTimeout");
  EXPECT_EQ(refuse.calls(), 0u);
}

TEST(Mock, MissingDirectoryIsConfigError) {
  try {
    MockProvider p(std::filesystem::path("/nonexistent/txpoc-mock"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Http, ReturnsContentAndUsage) {
  json seen;
  std::string auth;
  LocalServer srv([&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hello"}}],"usage":{"prompt_tokens":11,"completion_tokens":2}})",
                    "application/json");
  });
  ::setenv("TXPOC_TEST_KEY", "k123", 1);
  HttpProviderConfig c;
  c.endpoint = srv.url("/v1/chat/completions");
  c.model = "m1";
  c.api_key_env = "TXPOC_TEST_KEY";
  c.timeout_s = 5;
  HttpProvider p(c);
  auto r = p.complete(request("complete", "hi"));
  EXPECT_EQ(r.text, "hello");
  EXPECT_EQ(r.prompt_tokens, 11u);
  EXPECT_EQ(r.completion_tokens, 2u);
  EXPECT_EQ(seen["model"], "m1");
  EXPECT_EQ(seen["messages"].size(), 2u);
  EXPECT_EQ(seen["messages"][1]["content"], "hi");
  EXPECT_EQ(auth, "Bearer k123");
}

TEST(Http, StatusCodesMapToErrors) {
  int status = 403;
  LocalServer srv([&](const httplib::Request&, httplib::Response& res) {
    res.status = status;
    res.set_content("{}", "application/json");
  });
  HttpProviderConfig c;
  c.endpoint = srv.url("/v1/chat/completions");
  c.timeout_s = 5;
  HttpProvider p(c);
  EXPECT_EQ(error_of(p, request("complete", "x")), "ProviderRefusal");
  status = 500;
  EXPECT_EQ(error_of(p, request("complete", "x")), "ProviderTimeout");
  status = 200;
  EXPECT_EQ(error_of(p, request("complete", "x")), "ProviderRefusal");
}

TEST(Http, UnreachableEndpointIsTimeout) {
  HttpProviderConfig c;
  c.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  c.timeout_s = 1;
  HttpProvider p(c);
  EXPECT_EQ(error_of(p, request("complete", "x")), "ProviderTimeout");
}
