// radiomap - indoor radio map construction and trajectory recovery toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RADIOMAP_IO_DETAIL_HPP
#define RADIOMAP_IO_DETAIL_HPP

#include <stdexcept>
#include <string>

namespace rmap
{

// File-level failures (open, parse, format); the CLI maps these to a
// distinct exit code.
class io_error : public std::runtime_error
{
  public:
    explicit io_error(const std::string &what) : std::runtime_error(what) {}
};

} // namespace rmap

#endif
