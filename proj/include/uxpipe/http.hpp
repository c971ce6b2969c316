#pragma once

// Single entry point for cpp-httplib so every translation unit sees the same
// configuration (TLS on, for https:// policy endpoints).

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <string>
#include <string_view>
#include <utility>

#include "uxpipe/error.hpp"

namespace uxpipe::http {

// Splits "http://host:port/prefix" into ("http://host:port", "/prefix").
inline std::pair<std::string, std::string> split_base_url(std::string_view url) {
  const auto scheme = url.find("://");
  const auto name = scheme == std::string_view::npos ? std::string_view{} : url.substr(0, scheme);
  if (name != "http" && name != "https")
    throw UsageError("expected an http(s) URL, got '" + std::string(url) + "'");
  const auto path = url.find('/', scheme + 3);
  if (path == std::string_view::npos) return {std::string(url), ""};
  std::string prefix(url.substr(path));
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {std::string(url.substr(0, path)), prefix};
}

}  // namespace uxpipe::http
