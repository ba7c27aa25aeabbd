use super::{AppContext, CoreModel, RunSummary, TutorialError};
use crate::params::{ParamError, ParamTree};

#[derive(Debug, Clone, Default)]
pub struct TransmissionConfig;
#[derive(Debug, Clone, Default)]
pub struct TransmissionResult;
#[derive(Debug, Default)]
pub struct Transmission;

pub fn run_transmission(_c: &TransmissionConfig) -> Result<TransmissionResult, TutorialError> { todo!() }

impl CoreModel for Transmission {
    fn subsection_path(&self) -> &str { todo!() }
    fn declare_parameters(&self, _t: &mut ParamTree) -> Result<(), ParamError> { todo!() }
    fn parse_parameters(&mut self, _t: &ParamTree) -> Result<(), TutorialError> { todo!() }
    fn run(&mut self, _c: &AppContext) -> Result<RunSummary, TutorialError> { todo!() }
}
