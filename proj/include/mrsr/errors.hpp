/*
 * mrsr : anisotropic super-resolution toolkit for MR slice images
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace mrsr {

// Base for all toolkit errors. Commands map ConfigError/PlanError/SplitError
// to exit code 1 (validation) and everything else to exit code 2 (runtime).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IngestError : public Error { public: using Error::Error; };
class NormalizeError : public Error { public: using Error::Error; };
class SplitError : public Error { public: using Error::Error; };
class DegradeError : public Error { public: using Error::Error; };
class ShapeError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class TrainError : public Error { public: using Error::Error; };
class DivergenceError : public Error { public: using Error::Error; };
class CheckpointError : public Error { public: using Error::Error; };
class PlanError : public Error { public: using Error::Error; };
class FuseError : public Error { public: using Error::Error; };
class EvalError : public Error { public: using Error::Error; };

} // namespace mrsr
